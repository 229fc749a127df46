//! Likelihood inference: multi-start maximum likelihood, asymptotic
//! covariance from the Fisher information, and the symmetry test.

mod fisher;
mod fit;
mod likelihood;
mod optimize;
mod param;
mod symmetry;

pub use fisher::fisher_information;
pub use fit::{fit_mle, fit_weighted, FitOptions, FitResult};
pub use likelihood::{log_likelihood, weighted_log_likelihood};
pub use param::{BOUNDARY_TOL, KAPPA_FLOOR};
pub use symmetry::{symmetry_test, symmetry_test_with_fits, SymmetryTestResult, STATISTIC_TOL, TEST_LEVELS};

pub(crate) use fit::{moment_start, refine_weighted};
#[cfg(test)]
pub(crate) use likelihood::weighted_score;
#[cfg(test)]
pub(crate) use optimize::bfgs;
pub(crate) use param::Layout;

/// Number of free parameters of one component.
pub fn param_count(family: crate::families::Family, d: usize, skewed: bool) -> usize {
    Layout::new(family, d, skewed).n_free()
}
