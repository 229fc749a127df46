//! Log-likelihood and its gradient in the natural parameters.

use crate::error::{Error, Result};
use crate::skew::{SkewDensity, SkewModel};
use crate::torus::TorusPoint;

pub(crate) fn check_data(data: &[TorusPoint], d: usize) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(p) = data.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
    }
    Ok(())
}

/// `sum_i ln g(x_i)`; `-inf` if any point has zero density.
pub fn log_likelihood(model: &SkewModel, data: &[TorusPoint]) -> Result<f64> {
    check_data(data, model.dim())?;
    let dens = model.density()?;
    Ok(data.iter().map(|x| dens.log_density(x)).sum())
}

/// `sum_i w_i ln g(x_i)`, skipping zero weights.
pub fn weighted_log_likelihood(dens: &SkewDensity, data: &[TorusPoint], weights: Option<&[f64]>) -> f64 {
    match weights {
        None => data.iter().map(|x| dens.log_density(x)).sum(),
        Some(w) => data
            .iter()
            .zip(w)
            .filter(|(_, w)| **w > 0.0)
            .map(|(x, w)| w * dens.log_density(x))
            .sum(),
    }
}

/// Per-point score in the natural parameters `(mu, theta, lambda)`:
///
/// * `d/d mu_j = -d_j ln f(y) - lambda_j cos y_j / S`
/// * `d/d theta = d_theta ln f(y)`
/// * `d/d lambda_j = sin y_j / S`
///
/// with `y = x - mu` and `S = 1 + lambda' sin y`. Returns `ln g(x)`.
pub(crate) fn point_score(dens: &SkewDensity, x: &[f64], out: &mut [f64], scratch: &mut [f64]) -> Result<f64> {
    let d = dens.dim();
    let t = dens.base().params().family().theta_len(d);
    let (y, grad) = scratch.split_at_mut(d);
    dens.center(x, y);
    let s = dens.factor(y);
    let lambda = dens.lambda();
    dens.base().grad_y(y, &mut grad[..d]);
    for j in 0..d {
        out[j] = -grad[j] - lambda[j] * y[j].cos() / s;
        out[d + t + j] = y[j].sin() / s;
    }
    dens.base().theta_score(y, &mut out[d..d + t])?;
    Ok(if s > 0.0 { dens.base().log_density(y) + s.ln() } else { f64::NEG_INFINITY })
}

/// Weighted log-likelihood and its gradient in the natural parameters.
pub(crate) fn weighted_score(
    dens: &SkewDensity,
    data: &[TorusPoint],
    weights: Option<&[f64]>,
) -> Result<(f64, Vec<f64>)> {
    let d = dens.dim();
    let n_nat = 2 * d + dens.base().params().family().theta_len(d);
    let mut grad = vec![0.0; n_nat];
    let mut point = vec![0.0; n_nat];
    let mut scratch = vec![0.0; 2 * d];
    let mut ll = 0.0;
    for (i, x) in data.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        if w == 0.0 {
            continue;
        }
        let l = point_score(dens, x, &mut point, &mut scratch)?;
        ll += w * l;
        grad.iter_mut().zip(&point).for_each(|(g, p)| *g += w * p);
    }
    Ok((ll, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{base_log_density, FamilyParams};
    use crate::skew::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn single_point_uniform() {
        let m = SkewModel::symmetric(TorusPoint::zeros(2), FamilyParams::uniform(2).unwrap()).unwrap();
        let v = log_likelihood(&m, &[TorusPoint::zeros(2)]).unwrap();
        assert!((v + (4.0 * PI * PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn symmetric_is_base_sum() {
        let p = FamilyParams::cosine(1.0, 2.0, -0.5).unwrap();
        let m = SkewModel::symmetric(TorusPoint::new(vec![1.0, 2.0]), p.clone()).unwrap();
        let data = sample(&m, 200, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let direct: f64 = data.iter().map(|x| base_log_density(&p, &x.diff(m.mu())).unwrap()).sum();
        assert!((log_likelihood(&m, &data).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn matches_independent_per_point_sum() {
        let (k1, k2, r) = (2.0, 2.0, 1.0);
        let p = FamilyParams::sine(k1, k2, r).unwrap();
        let mu = [0.3, -0.4];
        let lam = [0.4, 0.2];
        let m = SkewModel::new(TorusPoint::new(mu.to_vec()), p, lam.to_vec()).unwrap();
        let data = sample(&m, 100, &mut ChaCha8Rng::seed_from_u64(17)).unwrap();
        let log_c = crate::families::sine_log_norm_const(k1, k2, r).unwrap();
        let mut direct = 0.0;
        for x in &data {
            let y1 = x[0] - mu[0];
            let y2 = x[1] - mu[1];
            let dens = (k1 * y1.cos() + k2 * y2.cos() + r * y1.sin() * y2.sin() - log_c).exp();
            direct += (dens * (1.0 + lam[0] * y1.sin() + lam[1] * y2.sin())).ln();
        }
        let v = log_likelihood(&m, &data).unwrap();
        assert!((v - direct).abs() <= 1e-12 * direct.abs().max(1.0), "{v} vs {direct}");
    }

    #[test]
    fn errors() {
        let m = SkewModel::symmetric(TorusPoint::zeros(2), FamilyParams::uniform(2).unwrap()).unwrap();
        assert!(matches!(log_likelihood(&m, &[]), Err(Error::EmptyInput)));
        assert!(log_likelihood(&m, &[TorusPoint::zeros(3)]).is_err());
    }
}
