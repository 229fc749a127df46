//! Sine-skewed distributions on the d-torus.
//!
//! A pointwise-symmetric base density `f(x - mu)` is skewed by the factor
//! `1 + sum_s lambda_s sin(x_s - mu_s)` with `sum |lambda_s| <= 1`. The
//! normalizing constant of the base is unchanged by the skewing, so every
//! base family in [`families`] gets an asymmetric version for free.
//!
//! The crate covers density evaluation, exact sampling, trigonometric
//! moments, constrained maximum-likelihood fitting with asymptotic
//! inference, a likelihood-ratio test of symmetry, and finite mixtures.

pub mod error;
pub mod families;
pub mod inference;
pub mod mixture;
pub mod numerics;
pub mod skew;
pub mod torus;

pub use error::{Error, Result};
pub use families::{base_is_unimodal, base_log_density, Family, FamilyParams, Modality};
pub use inference::{
    fisher_information, fit_mle, log_likelihood, symmetry_test, FitOptions, FitResult,
    SymmetryTestResult,
};
pub use mixture::{
    fit_mixture, mixture_log_density, select_model, MixtureModel, MixtureOptions, ModelScore,
    Ranking,
};
pub use numerics::QuadratureGrid;
pub use skew::{
    find_modes, sample, shape_summary, skew_cdf, skew_log_density, trig_moments, Mode,
    ShapeSummary, SkewModel,
};
pub use torus::{wrap_angle, TorusPoint};
