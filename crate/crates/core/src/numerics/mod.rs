//! Special functions and deterministic quadrature.

mod bessel;
mod gamma;
mod quadrature;

pub use bessel::{bessel_i, bessel_i_ratio, log_bessel_i, log_bessel_i0, log_bessel_i_seq, MAX_ORDER};
pub use gamma::{
    chi_square_cdf, chi_square_quantile, chi_square_sf, ln_gamma, regularized_gamma_p,
    regularized_gamma_q,
};
pub use quadrature::{
    box_integrate, gauss_legendre, torus_integrate, GaussLegendre, NeumaierSum, QuadratureGrid,
};

/// Numerically stable `log(sum(exp(xs)))`. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
