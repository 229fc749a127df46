use rand::Rng;

use super::SkewModel;
use crate::error::Result;
use crate::families::BaseSampler;
use crate::torus::TorusPoint;

/// `n` draws from the skewed model.
///
/// Each base draw `Y` (centered) is kept with probability
/// `(1 + sum lambda_s sin Y_s) / 2` and reflected to `-Y` otherwise, then
/// shifted by `mu`. Deterministic given the state of `rng`.
pub fn sample<R: Rng + ?Sized>(model: &SkewModel, n: usize, rng: &mut R) -> Result<Vec<TorusPoint>> {
    let sampler = BaseSampler::new(model.theta())?;
    let base = sampler.sample_n(n, rng)?;
    let mu = model.mu();
    let lambda = model.lambda();
    Ok(base
        .into_iter()
        .map(|mut y| {
            if !keep(&y, lambda, rng.gen()) {
                y.iter_mut().for_each(|v| *v = -*v);
            }
            TorusPoint::new(y.iter().zip(mu.iter()).map(|(v, m)| v + m).collect::<Vec<_>>())
        })
        .collect())
}

/// Whether a centered draw `y` survives the reflection step for uniform `u`.
#[inline]
pub(crate) fn keep(y: &[f64], lambda: &[f64], u: f64) -> bool {
    let s: f64 = lambda.iter().zip(y).map(|(l, v)| l * v.sin()).sum();
    u <= 0.5 * (1.0 + s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilyParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn cardioid_mean_direction() {
        let m = SkewModel::new(TorusPoint::zeros(1), FamilyParams::uniform(1).unwrap(), vec![1.0]).unwrap();
        let xs = sample(&m, 100_000, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let (s, c) = xs.iter().fold((0.0, 0.0), |(s, c), x| (s + x[0].sin(), c + x[0].cos()));
        let mean = s.atan2(c);
        assert!((mean - PI / 2.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn saturated_factor_never_flips() {
        let lambda = [0.5, 0.5];
        let y = [PI / 2.0, PI / 2.0];
        for u in [0.0, 0.3, 0.999_999, 1.0] {
            assert!(keep(&y, &lambda, u));
        }
        assert!(!keep(&[-PI / 2.0, -PI / 2.0], &lambda, 1e-12));
    }

    #[test]
    fn cardioid_half_mass() {
        let m = SkewModel::new(TorusPoint::zeros(2), FamilyParams::uniform(2).unwrap(), vec![1.0, 0.0]).unwrap();
        let xs = sample(&m, 20_000, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        // P(sin x1 > 0) = 1/2 + 1/pi under the cardioid
        let pos = xs.iter().filter(|x| x[0].sin() > 0.0).count() as f64 / 20_000.0;
        assert!((pos - (0.5 + 1.0 / PI)).abs() < 0.015, "{pos}");
    }

    #[test]
    fn outputs_wrapped_and_reproducible() {
        let m = SkewModel::new(
            TorusPoint::new(vec![3.0, -3.0]),
            FamilyParams::wrapped_cauchy(0.5, 0.2, 0.3).unwrap(),
            vec![0.4, 0.4],
        )
        .unwrap();
        let a = sample(&m, 1000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = sample(&m, 1000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x.iter().all(|v| (-PI..PI).contains(v))));
    }
}
