//! Likelihood-ratio test of `lambda = 0`.

use serde::{Deserialize, Serialize};

use super::fit::{fit_mle, FitOptions, FitResult};
use crate::error::{Error, Result};
use crate::families::Family;
use crate::numerics::chi_square_sf;
use crate::torus::TorusPoint;

/// Levels at which rejection is reported.
pub const TEST_LEVELS: [f64; 3] = [0.10, 0.05, 0.01];
/// Negative statistics down to this value are treated as optimizer noise.
pub const STATISTIC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTestResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    /// `(alpha, rejected)` for each level in [`TEST_LEVELS`].
    pub reject_at: Vec<(f64, bool)>,
    pub log_lik_symmetric: f64,
    pub log_lik_skewed: f64,
}

impl SymmetryTestResult {
    /// Build from the two maximized log-likelihoods.
    pub fn from_log_liks(ll0: f64, ll1: f64, df: u32) -> Result<Self> {
        let raw = -2.0 * (ll0 - ll1);
        if raw < -STATISTIC_TOL {
            return Err(Error::OptimizerInconsistency(format!(
                "skewed fit is worse than the symmetric fit (statistic {raw})"
            )));
        }
        let statistic = raw.max(0.0);
        let p_value = chi_square_sf(statistic, df).clamp(0.0, 1.0);
        Ok(SymmetryTestResult {
            statistic,
            df,
            p_value,
            reject_at: TEST_LEVELS.iter().map(|&a| (a, p_value < a)).collect(),
            log_lik_symmetric: ll0,
            log_lik_skewed: ll1,
        })
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Test `H0: lambda = 0`. The symmetric fit runs first; the skewed fit then
/// uses the same starts plus the symmetric optimum, so the models are nested
/// in the optimizer as well as in the parameter space.
pub fn symmetry_test(family: Family, data: &[TorusPoint], options: &FitOptions) -> Result<SymmetryTestResult> {
    Ok(symmetry_test_with_fits(family, data, options)?.0)
}

/// As [`symmetry_test`], also returning the symmetric and skewed fits.
pub fn symmetry_test_with_fits(
    family: Family,
    data: &[TorusPoint],
    options: &FitOptions,
) -> Result<(SymmetryTestResult, FitResult, FitResult)> {
    let sym_opts = FitOptions { fix_lambda_zero: true, ..options.clone() };
    let sym = fit_mle(family, false, data, &sym_opts)?;
    let mut skew_opts = FitOptions { fix_lambda_zero: false, ..options.clone() };
    skew_opts.initial.push(sym.model.clone());
    let skew = fit_mle(family, true, data, &skew_opts)?;
    let df = data.first().map_or(0, |p| p.dim()) as u32;
    let res = SymmetryTestResult::from_log_liks(sym.log_lik, skew.log_lik, df)?;
    Ok((res, sym, skew))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_small_negative_statistics() {
        let r = SymmetryTestResult::from_log_liks(-100.0, -100.0 - 1e-7, 2).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(SymmetryTestResult::from_log_liks(-100.0, -100.1, 2).is_err());
    }

    #[test]
    fn rejection_levels() {
        // chi2_2 upper 5% point is 5.991
        let r = SymmetryTestResult::from_log_liks(-100.0, -100.0 + 3.1, 2).unwrap();
        assert!((r.statistic - 6.2).abs() < 1e-12);
        assert_eq!(r.reject_at, vec![(0.10, true), (0.05, true), (0.01, false)]);
    }
}
