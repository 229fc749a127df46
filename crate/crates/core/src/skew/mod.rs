//! The sine-skewing transform
//! `g(x) = f(x - mu) (1 + sum_s lambda_s sin(x_s - mu_s))`.

mod cdf;
mod marginal;
mod modes;
mod moments;
mod sample;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{BaseDensity, Family, FamilyParams};
use crate::torus::{wrap_angle, TorusPoint};

pub use cdf::skew_cdf;
pub use marginal::{
    closed_form_discrepancy, marginal_log_density, printed_marginal_log_density, sine_marginal_log_density,
    CLOSED_FORM_TOL,
};
pub use modes::{find_modes, find_modes_with, Mode, DEFAULT_MODE_GRID, DEFAULT_REFINE_TOL};
pub use moments::{shape_summary, trig_moments, BaseMoments, ShapeSummary};
pub use sample::sample;

/// Slack allowed on `sum |lambda_s| <= 1` for round-off in derived values.
pub const LAMBDA_SLACK: f64 = 1e-12;

/// A sine-skewed model: location, base parameters and skewness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct SkewModel {
    mu: TorusPoint,
    theta: FamilyParams,
    lambda: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    mu: TorusPoint,
    theta: FamilyParams,
    lambda: Vec<f64>,
}

impl TryFrom<RawModel> for SkewModel {
    type Error = Error;
    fn try_from(r: RawModel) -> Result<Self> {
        SkewModel::new(r.mu, r.theta, r.lambda)
    }
}

impl From<SkewModel> for RawModel {
    fn from(m: SkewModel) -> Self {
        RawModel { mu: m.mu, theta: m.theta, lambda: m.lambda }
    }
}

/// Check `lambda` lies in the closed unit l1-ball.
pub fn check_lambda(lambda: &[f64]) -> Result<()> {
    if let Some(l) = lambda.iter().find(|l| !l.is_finite()) {
        return Err(Error::Domain(format!("lambda must be finite, got {l}")));
    }
    let l1: f64 = lambda.iter().map(|l| l.abs()).sum();
    if l1 > 1.0 + LAMBDA_SLACK {
        return Err(Error::Domain(format!(
            "skewness must satisfy sum |lambda_s| <= 1, got {l1}"
        )));
    }
    Ok(())
}

impl SkewModel {
    pub fn new(mu: TorusPoint, theta: FamilyParams, lambda: Vec<f64>) -> Result<Self> {
        let d = theta.dim();
        if mu.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: mu.dim() });
        }
        if lambda.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: lambda.len() });
        }
        check_lambda(&lambda)?;
        Ok(SkewModel { mu, theta, lambda })
    }

    /// The base model itself (`lambda = 0`).
    pub fn symmetric(mu: TorusPoint, theta: FamilyParams) -> Result<Self> {
        let d = theta.dim();
        Self::new(mu, theta, vec![0.0; d])
    }

    pub fn mu(&self) -> &TorusPoint {
        &self.mu
    }

    pub fn theta(&self) -> &FamilyParams {
        &self.theta
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    pub fn family(&self) -> Family {
        self.theta.family()
    }

    pub fn is_symmetric(&self) -> bool {
        self.lambda.iter().all(|l| *l == 0.0)
    }

    /// Same model with a new location.
    pub fn with_mu(&self, mu: TorusPoint) -> Result<Self> {
        Self::new(mu, self.theta.clone(), self.lambda.clone())
    }

    /// Same model with new skewness.
    pub fn with_lambda(&self, lambda: Vec<f64>) -> Result<Self> {
        Self::new(self.mu.clone(), self.theta.clone(), lambda)
    }

    pub fn density(&self) -> Result<SkewDensity> {
        SkewDensity::new(self)
    }
}

/// Evaluator with the base constant precomputed.
#[derive(Debug, Clone)]
pub struct SkewDensity {
    mu: Vec<f64>,
    lambda: Vec<f64>,
    base: BaseDensity,
}

impl SkewDensity {
    pub fn new(model: &SkewModel) -> Result<Self> {
        Ok(SkewDensity {
            mu: model.mu.to_vec(),
            lambda: model.lambda.clone(),
            base: BaseDensity::new(&model.theta)?,
        })
    }

    pub fn base(&self) -> &BaseDensity {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Center a point: `wrap(x - mu)`.
    pub fn center(&self, x: &[f64], out: &mut [f64]) {
        for ((o, a), m) in out.iter_mut().zip(x).zip(&self.mu) {
            *o = wrap_angle(a - m);
        }
    }

    /// Skewing factor `1 + sum lambda_s sin y_s` at a centered point.
    #[inline]
    pub fn factor(&self, y: &[f64]) -> f64 {
        1.0 + self.lambda.iter().zip(y).map(|(l, v)| l * v.sin()).sum::<f64>()
    }

    /// `ln g` at a centered point; `-inf` where the factor vanishes.
    pub fn log_density_centered(&self, y: &[f64]) -> f64 {
        let s = self.factor(y);
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.base.log_density(y) + s.ln()
    }

    /// `ln g(x)` at an absolute point (length must equal the dimension).
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut y = [0.0; 8];
        if x.len() <= y.len() {
            let y = &mut y[..x.len()];
            self.center(x, y);
            self.log_density_centered(y)
        } else {
            let mut y = vec![0.0; x.len()];
            self.center(x, &mut y);
            self.log_density_centered(&y)
        }
    }
}

/// `ln g(x)` for the skewed model.
pub fn skew_log_density(model: &SkewModel, x: &TorusPoint) -> Result<f64> {
    if x.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x.dim() });
    }
    Ok(SkewDensity::new(model)?.log_density(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{torus_integrate, QuadratureGrid};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    pub(crate) fn lambda_grid() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![0.5, 0.25], vec![1.0, 0.0], vec![0.3, -0.3], vec![-0.2, -0.8]]
    }

    #[test]
    fn symmetric_model_is_the_base() {
        let p = FamilyParams::cosine(1.0, 2.0, 0.5).unwrap();
        let m = SkewModel::symmetric(TorusPoint::new(vec![0.4, -2.0]), p.clone()).unwrap();
        let x = TorusPoint::new(vec![1.0, 2.5]);
        let expect = crate::families::base_log_density(&p, &x.diff(m.mu())).unwrap();
        assert_relative_eq!(skew_log_density(&m, &x).unwrap(), expect, max_relative = 1e-15);
    }

    #[test]
    fn uniform_substitution() {
        let m = SkewModel::new(TorusPoint::zeros(2), FamilyParams::uniform(2).unwrap(), vec![0.5, 0.25]).unwrap();
        let v = skew_log_density(&m, &TorusPoint::new(vec![PI / 2.0, 0.0])).unwrap();
        assert_relative_eq!(v, -(4.0 * PI * PI).ln() + 1.5f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn boundary_lambda_gives_neg_infinity() {
        let m = SkewModel::new(TorusPoint::zeros(2), FamilyParams::uniform(2).unwrap(), vec![1.0, 0.0]).unwrap();
        let v = skew_log_density(&m, &TorusPoint::new(vec![-PI / 2.0, 0.3])).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn normalization_over_simplex_grid() {
        let g = QuadratureGrid::new(2, 256).unwrap();
        let bases = [
            FamilyParams::uniform(2).unwrap(),
            FamilyParams::sine(2.0, 10.0, -5.0).unwrap(),
            FamilyParams::cosine(0.5, 2.0, 5.0).unwrap(),
            FamilyParams::wrapped_cauchy(0.9, 0.1, 0.8).unwrap(),
        ];
        for p in &bases {
            for l in lambda_grid() {
                let m = SkewModel::new(TorusPoint::new(vec![1.0, -2.0]), p.clone(), l).unwrap();
                let dens = m.density().unwrap();
                let total = torus_integrate(|x| dens.log_density(x).exp(), &g).unwrap();
                assert!((total - 1.0).abs() < 1e-6, "{m:?}: {total}");
            }
        }
    }

    #[test]
    fn reflection_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = FamilyParams::wrapped_cauchy(0.3, 0.5, -0.6).unwrap();
        let mu = TorusPoint::new(vec![0.7, 2.9]);
        let a = SkewModel::new(mu.clone(), p.clone(), vec![0.4, -0.5]).unwrap();
        let b = SkewModel::new(mu.clone(), p, vec![-0.4, 0.5]).unwrap();
        for _ in 0..1000 {
            let t = [rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)];
            let xp = TorusPoint::new(vec![mu[0] + t[0], mu[1] + t[1]]);
            let xm = TorusPoint::new(vec![mu[0] - t[0], mu[1] - t[1]]);
            let u = skew_log_density(&a, &xp).unwrap();
            let v = skew_log_density(&b, &xm).unwrap();
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        let p = FamilyParams::uniform(2).unwrap();
        assert!(SkewModel::new(TorusPoint::zeros(2), p.clone(), vec![0.7, 0.5]).is_err());
        assert!(SkewModel::new(TorusPoint::zeros(2), p.clone(), vec![0.5]).is_err());
        assert!(SkewModel::new(TorusPoint::zeros(3), p.clone(), vec![0.0, 0.0]).is_err());
        assert!(SkewModel::new(TorusPoint::zeros(2), p, vec![f64::NAN, 0.0]).is_err());
        let bad = r#"{"mu":[0.0,0.0],"theta":{"family":"uniform","dim":2},"lambda":[0.9,0.9]}"#;
        assert!(serde_json::from_str::<SkewModel>(bad).is_err());
    }
}
