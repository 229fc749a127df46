//! Trigonometric moments and shape parameters.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::SkewModel;
use crate::error::{Error, Result};
use crate::families::{BaseDensity, Family, FamilyParams};
use crate::numerics::{log_bessel_i, NeumaierSum, QuadratureGrid};
use crate::torus::{wrap_angle, TorusPoint};

/// Cosine moments `alpha0_q = E_f[cos(q' Y)]` of a base density.
///
/// Closed forms cover the uniform, independent von Mises products and single
/// axis wrapped Cauchy moments; everything else is integrated on the default
/// grid, with the density tabulated once and results cached per order.
#[derive(Debug)]
pub struct BaseMoments {
    params: FamilyParams,
    grid: QuadratureGrid,
    table: OnceLock<Result<Vec<f64>>>,
    cache: Mutex<HashMap<Vec<i32>, f64>>,
}

impl BaseMoments {
    pub fn new(params: &FamilyParams) -> Self {
        Self::with_grid(params, QuadratureGrid::default_for(params.dim()))
    }

    pub fn with_grid(params: &FamilyParams, grid: QuadratureGrid) -> Self {
        BaseMoments { params: params.clone(), grid, table: OnceLock::new(), cache: Mutex::new(HashMap::new()) }
    }

    pub fn alpha(&self, q: &[i32]) -> Result<f64> {
        let d = self.params.dim();
        if q.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: q.len() });
        }
        // f is symmetric so alpha0_q = alpha0_{-q}
        if let Some(v) = self.closed_form(q)? {
            return Ok(v);
        }
        let key: Vec<i32> = if q.iter().find(|v| **v != 0).is_some_and(|v| *v < 0) {
            q.iter().map(|v| -v).collect()
        } else {
            q.to_vec()
        };
        if let Some(v) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = self.by_quadrature(&key)?;
        self.cache.lock().expect("cache poisoned").insert(key, v);
        Ok(v)
    }

    fn closed_form(&self, q: &[i32]) -> Result<Option<f64>> {
        let p = &self.params;
        let nonzero: Vec<usize> = (0..q.len()).filter(|&s| q[s] != 0).collect();
        if nonzero.is_empty() {
            return Ok(Some(1.0));
        }
        match p.family() {
            Family::Uniform => Ok(Some(0.0)),
            Family::Sine | Family::Cosine if p.dep().iter().all(|r| *r == 0.0) => {
                let mut log = 0.0;
                for &s in &nonzero {
                    let k = p.kappa()[s];
                    if k == 0.0 {
                        return Ok(Some(0.0));
                    }
                    log += log_bessel_i(q[s].unsigned_abs(), k)? - log_bessel_i(0, k)?;
                }
                Ok(Some(log.exp()))
            }
            Family::WrappedCauchy if nonzero.len() == 1 => {
                let s = nonzero[0];
                Ok(Some(p.kappa()[s].powi(q[s].abs())))
            }
            _ => Ok(None),
        }
    }

    fn by_quadrature(&self, q: &[i32]) -> Result<f64> {
        let table = self
            .table
            .get_or_init(|| {
                let base = BaseDensity::new(&self.params)?;
                let mut t = Vec::with_capacity(self.grid.node_count());
                self.grid.for_each_node(|y| t.push(base.log_density(y).exp()));
                Ok(t)
            })
            .as_ref()
            .map_err(|e| e.clone())?;
        let mut acc = NeumaierSum::new();
        let mut i = 0;
        self.grid.for_each_node(|y| {
            let arg: f64 = q.iter().zip(y).map(|(a, b)| *a as f64 * b).sum();
            acc.add(table[i] * arg.cos());
            i += 1;
        });
        Ok(acc.value() * self.grid.weight())
    }
}

/// `(alpha_p, beta_p)`, the cosine and sine moments of order `p` of the
/// skewed model about `mu`, from the base cosine moments:
/// `alpha_p = alpha0_p` and
/// `beta_p = 1/2 sum_s lambda_s (alpha0_{p - e_s} - alpha0_{p + e_s})`.
pub fn trig_moments<F>(model: &SkewModel, p: &[i32], mut base_cosine_moment: F) -> Result<(f64, f64)>
where
    F: FnMut(&[i32]) -> Result<f64>,
{
    let d = model.dim();
    if p.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: p.len() });
    }
    let alpha = base_cosine_moment(p)?;
    let mut beta = 0.0;
    let mut q = p.to_vec();
    for (s, &l) in model.lambda().iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        q[s] = p[s] - 1;
        let lo = base_cosine_moment(&q)?;
        q[s] = p[s] + 1;
        let hi = base_cosine_moment(&q)?;
        q[s] = p[s];
        beta += 0.5 * l * (lo - hi);
    }
    Ok((alpha, beta))
}

/// Per-coordinate location, spread and shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSummary {
    pub mean_direction: TorusPoint,
    pub concentration: Vec<f64>,
    pub variance: Vec<f64>,
    pub skewness: Vec<f64>,
    pub kurtosis: Vec<f64>,
}

/// Mean direction, mean resultant length, circular variance, skewness
/// `beta2_bar / V^{3/2}` and kurtosis `(alpha2_bar - rho^2) / V^2` per coordinate,
/// where the bars denote second moments about the mean direction.
pub fn shape_summary(model: &SkewModel) -> Result<ShapeSummary> {
    let bm = BaseMoments::new(model.theta());
    shape_summary_with(model, &bm)
}

pub fn shape_summary_with(model: &SkewModel, bm: &BaseMoments) -> Result<ShapeSummary> {
    let d = model.dim();
    let mut out = ShapeSummary {
        mean_direction: model.mu().clone(),
        concentration: vec![0.0; d],
        variance: vec![0.0; d],
        skewness: vec![0.0; d],
        kurtosis: vec![0.0; d],
    };
    let mut mean = model.mu().to_vec();
    for s in 0..d {
        let mut p = vec![0; d];
        p[s] = 1;
        let (a1, b1) = trig_moments(model, &p, |q| bm.alpha(q))?;
        p[s] = 2;
        let (a2, b2) = trig_moments(model, &p, |q| bm.alpha(q))?;
        let rho = a1.hypot(b1).min(1.0);
        let offset = if rho > 0.0 { b1.atan2(a1) } else { 0.0 };
        let v = 1.0 - rho;
        if v < 1e-12 {
            return Err(Error::DegenerateVariance(v));
        }
        // second moments rotated to the mean direction
        let (sn, cs) = (2.0 * offset).sin_cos();
        let alpha2_bar = a2 * cs + b2 * sn;
        let beta2_bar = b2 * cs - a2 * sn;
        mean[s] = wrap_angle(mean[s] + offset);
        out.concentration[s] = rho;
        out.variance[s] = v;
        out.skewness[s] = beta2_bar / v.powf(1.5);
        out.kurtosis[s] = (alpha2_bar - rho * rho) / (v * v);
    }
    out.mean_direction = TorusPoint::new(mean);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::torus_integrate;
    use crate::skew::SkewDensity;
    use approx::assert_relative_eq;

    fn quad_moment(dens: &SkewDensity, p: &[i32], mu: &[f64]) -> (f64, f64) {
        let g = QuadratureGrid::new(2, 256).unwrap();
        let arg = |x: &[f64]| -> f64 { p.iter().zip(x).zip(mu).map(|((a, b), m)| *a as f64 * (b - m)).sum() };
        let a = torus_integrate(|x| arg(x).cos() * dens.log_density(x).exp(), &g).unwrap();
        let b = torus_integrate(|x| arg(x).sin() * dens.log_density(x).exp(), &g).unwrap();
        (a, b)
    }

    #[test]
    fn symmetric_has_no_sine_moments() {
        let m = SkewModel::symmetric(TorusPoint::zeros(2), FamilyParams::sine(2.0, 2.0, 1.0).unwrap()).unwrap();
        let bm = BaseMoments::new(m.theta());
        for p in [[1, 0], [0, 1], [2, -1], [3, 3]] {
            assert_eq!(trig_moments(&m, &p, |q| bm.alpha(q)).unwrap().1, 0.0);
        }
        let s = shape_summary(&m).unwrap();
        assert!(s.skewness.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(s.mean_direction, TorusPoint::zeros(2));
    }

    #[test]
    fn cardioid_concentration() {
        let m = SkewModel::new(TorusPoint::zeros(1), FamilyParams::uniform(1).unwrap(), vec![0.8]).unwrap();
        let bm = BaseMoments::new(m.theta());
        let (a, b) = trig_moments(&m, &[1], |q| bm.alpha(q)).unwrap();
        assert_eq!((a, b), (0.0, 0.4));
        let s = shape_summary(&m).unwrap();
        assert_relative_eq!(s.concentration[0], 0.4, max_relative = 1e-15);
        assert_relative_eq!(s.variance[0], 0.6, max_relative = 1e-15);
        assert_relative_eq!(s.mean_direction[0], std::f64::consts::FRAC_PI_2, max_relative = 1e-15);
    }

    #[test]
    fn moments_match_quadrature() {
        let models = [
            SkewModel::new(TorusPoint::new(vec![0.5, -1.0]), FamilyParams::sine(2.0, 2.0, 1.0).unwrap(), vec![0.3, 0.2])
                .unwrap(),
            SkewModel::new(TorusPoint::new(vec![2.0, 3.0]), FamilyParams::cosine(1.0, 4.0, -1.5).unwrap(), vec![-0.5, 0.4])
                .unwrap(),
            SkewModel::new(
                TorusPoint::new(vec![-2.5, 0.1]),
                FamilyParams::wrapped_cauchy(0.3, 0.6, 0.4).unwrap(),
                vec![0.1, -0.6],
            )
            .unwrap(),
            SkewModel::new(
                TorusPoint::new(vec![0.0, 0.0]),
                FamilyParams::sine(3.0, 0.5, 0.0).unwrap(),
                vec![0.6, 0.3],
            )
            .unwrap(),
        ];
        for m in &models {
            let bm = BaseMoments::new(m.theta());
            let dens = m.density().unwrap();
            for p1 in -3..=3i32 {
                for p2 in -3..=3i32 {
                    if p1.abs() + p2.abs() > 3 {
                        continue;
                    }
                    let (a, b) = trig_moments(m, &[p1, p2], |q| bm.alpha(q)).unwrap();
                    let (qa, qb) = quad_moment(&dens, &[p1, p2], m.mu());
                    assert!((a - qa).abs() < 1e-8 && (b - qb).abs() < 1e-8, "{m:?} p=({p1},{p2})");
                }
            }
        }
    }

    #[test]
    fn shape_matches_quadrature() {
        let m = SkewModel::new(TorusPoint::new(vec![1.0, -2.0]), FamilyParams::sine(2.0, 2.0, 1.0).unwrap(), vec![0.3, 0.2])
            .unwrap();
        let s = shape_summary(&m).unwrap();
        let dens = m.density().unwrap();
        for k in 0..2 {
            let mut p = [0, 0];
            p[k] = 1;
            let (a, b) = quad_moment(&dens, &p, &[0.0, 0.0]);
            let mean = b.atan2(a);
            let rho = a.hypot(b);
            p[k] = 2;
            let shifted = [if k == 0 { mean } else { 0.0 }, if k == 1 { mean } else { 0.0 }];
            let (a2, b2) = quad_moment(&dens, &p, &shifted);
            let v = 1.0 - rho;
            assert!((wrap_angle(s.mean_direction[k] - mean)).abs() < 1e-8);
            assert!((s.concentration[k] - rho).abs() < 1e-8);
            assert!((s.skewness[k] - b2 / v.powf(1.5)).abs() < 1e-6);
            assert!((s.kurtosis[k] - (a2 - rho * rho) / (v * v)).abs() < 1e-6);
            assert_relative_eq!(s.variance[k], 1.0 - s.concentration[k], max_relative = 0.0);
        }
    }

    #[test]
    fn degenerate_variance() {
        let m = SkewModel::symmetric(TorusPoint::zeros(1), FamilyParams::von_mises(1e16).unwrap()).unwrap();
        assert!(matches!(shape_summary(&m), Err(Error::DegenerateVariance(_))));
    }
}
