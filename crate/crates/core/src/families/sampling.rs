//! Draws from the base densities, centered at the origin.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::{pairs, Family, FamilyParams, WCCoefficients};
use crate::error::{Error, Result};
use crate::numerics::log_bessel_i0;
use crate::torus::wrap_angle;

/// Proposals allowed per accepted draw before giving up.
pub const REJECTION_CAP: usize = 1_000_000;

const ENVELOPE_BINS: usize = 512;
const GIBBS_BURN_IN: usize = 500;
const GIBBS_THIN: usize = 5;

/// Von Mises draw with mean 0 (Best and Fisher, 1979).
pub fn sample_von_mises<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> Result<f64> {
    if kappa < 1e-8 {
        return Ok(rng.gen_range(-PI..PI));
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let s = (1.0 + rho * rho) / (2.0 * rho);
    for _ in 0..REJECTION_CAP {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let u3: f64 = rng.gen();
        let z = (PI * u1).cos();
        let f = (1.0 + s * z) / (s + z);
        let c = kappa * (s - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return Ok(wrap_angle(if u3 > 0.5 { theta } else { -theta }));
        }
    }
    Err(Error::RejectionCap(REJECTION_CAP))
}

/// Wrapped Cauchy draw with mean 0 and mean resultant length `rho`.
pub fn sample_wrapped_cauchy<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    wrap_angle(2.0 * (((1.0 - rho) / (1.0 + rho)) * (PI * (u - 0.5)).tan()).atan())
}

/// A prepared sampler for one base density.
///
/// Bivariate Sine and Cosine draws are exact: the first coordinate comes from
/// its marginal `exp(k1 cos y1) I0(a(y1))` by rejection under a piecewise
/// constant envelope, the second from its von Mises conditional. The wrapped
/// Cauchy uses its wrapped Cauchy marginal and conditional. For `d >= 3` a
/// Gibbs chain is run, which is approximate.
#[derive(Debug, Clone)]
pub struct BaseSampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Uniform(usize),
    VonMises(f64),
    Bivariate { cosine: bool, k1: f64, k2: f64, r: f64, env: Envelope },
    WrappedCauchy { k1: f64, c: WCCoefficients },
    Gibbs { cosine: bool, kappa: Vec<f64>, w: Vec<Vec<f64>> },
}

/// Piecewise-constant upper bound on a log density over equal bins.
#[derive(Debug, Clone)]
struct Envelope {
    lower: f64,
    width: f64,
    log_bound: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Envelope {
    fn new<F: Fn(f64) -> f64>(log_h: F, lipschitz: f64) -> Self {
        let width = TAU / ENVELOPE_BINS as f64;
        let ends: Vec<f64> = (0..=ENVELOPE_BINS).map(|i| log_h(-PI + width * i as f64)).collect();
        // a Lipschitz function on [a, b] never exceeds (f(a) + f(b) + L (b - a)) / 2
        let log_bound: Vec<f64> =
            ends.windows(2).map(|e| 0.5 * (e[0] + e[1] + lipschitz * width)).collect();
        let top = log_bound.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut cumulative = Vec::with_capacity(ENVELOPE_BINS);
        let mut acc = 0.0;
        for b in &log_bound {
            acc += (b - top).exp();
            cumulative.push(acc);
        }
        Envelope { lower: -PI, width, log_bound, cumulative }
    }

    fn draw<R: Rng + ?Sized, F: Fn(f64) -> f64>(&self, log_h: F, rng: &mut R) -> Result<f64> {
        let total = *self.cumulative.last().expect("bins");
        for _ in 0..REJECTION_CAP {
            let u = rng.gen::<f64>() * total;
            let bin = self.cumulative.partition_point(|c| *c <= u).min(ENVELOPE_BINS - 1);
            let y = self.lower + self.width * (bin as f64 + rng.gen::<f64>());
            let v: f64 = rng.gen();
            if v.ln() <= log_h(y) - self.log_bound[bin] {
                return Ok(wrap_angle(y));
            }
        }
        Err(Error::RejectionCap(REJECTION_CAP))
    }
}

/// `(A, B)` with the conditional of `y2` given `y1` proportional to
/// `exp(A cos y2 + B sin y2)`.
#[inline]
fn bivariate_conditional(cosine: bool, k2: f64, r: f64, y1: f64) -> (f64, f64) {
    let (s, c) = y1.sin_cos();
    if cosine {
        (k2 + r * c, r * s)
    } else {
        (k2, r * s)
    }
}

fn bivariate_marginal(cosine: bool, k1: f64, k2: f64, r: f64, y1: f64) -> f64 {
    let (a, b) = bivariate_conditional(cosine, k2, r, y1);
    k1 * y1.cos() + log_bessel_i0(a.hypot(b))
}

impl BaseSampler {
    pub fn new(params: &FamilyParams) -> Result<Self> {
        let d = params.dim();
        let kind = match params.family() {
            Family::Uniform => SamplerKind::Uniform(d),
            Family::Sine | Family::Cosine if d == 1 => SamplerKind::VonMises(params.kappa()[0]),
            Family::Sine | Family::Cosine if d == 2 => {
                let cosine = params.family() == Family::Cosine;
                let (k1, k2, r) = (params.kappa()[0], params.kappa()[1], params.dep()[0]);
                // |d/dy ln I0(a(y))| <= |a'(y)|, bounded by |r| (Sine) or min(k2, |r|) (Cosine)
                let lip = k1 + if cosine { k2.min(r.abs()) } else { r.abs() };
                let env = Envelope::new(|y| bivariate_marginal(cosine, k1, k2, r, y), lip);
                SamplerKind::Bivariate { cosine, k1, k2, r, env }
            }
            Family::Sine | Family::Cosine => {
                let scale = 2.0;
                let mut w = vec![vec![0.0; d]; d];
                for ((i, j), v) in pairs(d).into_iter().zip(params.dep()) {
                    w[i][j] = scale * v;
                    w[j][i] = scale * v;
                }
                SamplerKind::Gibbs { cosine: params.family() == Family::Cosine, kappa: params.kappa().to_vec(), w }
            }
            Family::WrappedCauchy => SamplerKind::WrappedCauchy {
                k1: params.kappa()[0],
                c: params.wc().expect("wc params"),
            },
        };
        Ok(BaseSampler { kind })
    }

    /// Whether draws are exact (as opposed to a Markov chain).
    pub fn is_exact(&self) -> bool {
        !matches!(self.kind, SamplerKind::Gibbs { .. })
    }

    /// `n` centered draws.
    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        if let SamplerKind::Gibbs { cosine, kappa, w } = &self.kind {
            return gibbs(*cosine, kappa, w, n, rng);
        }
        (0..n).map(|_| self.draw_one(rng)).collect()
    }

    fn draw_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match &self.kind {
            SamplerKind::Uniform(d) => Ok((0..*d).map(|_| rng.gen_range(-PI..PI)).collect()),
            SamplerKind::VonMises(k) => Ok(vec![sample_von_mises(*k, rng)?]),
            SamplerKind::Bivariate { cosine, k1, k2, r, env } => {
                let y1 = env.draw(|y| bivariate_marginal(*cosine, *k1, *k2, *r, y), rng)?;
                let (a, b) = bivariate_conditional(*cosine, *k2, *r, y1);
                let y2 = wrap_angle(b.atan2(a) + sample_von_mises(a.hypot(b), rng)?);
                Ok(vec![y1, y2])
            }
            SamplerKind::WrappedCauchy { k1, c } => {
                let y1 = sample_wrapped_cauchy(*k1, rng);
                let (s, co) = y1.sin_cos();
                let a = c.c0 - c.c1 * co;
                let b = c.c2 + c.c3 * co;
                let cc = c.c4 * s;
                let big_r = b.hypot(cc);
                let y2 = if big_r == 0.0 {
                    rng.gen_range(-PI..PI)
                } else {
                    // 1 / (A - R cos(y2 - m)) is wrapped Cauchy with (1 + rho^2) / (2 rho) = A / R
                    let rho = big_r / (a + (a * a - big_r * big_r).max(0.0).sqrt());
                    wrap_angle(cc.atan2(b) + sample_wrapped_cauchy(rho, rng))
                };
                Ok(vec![y1, y2])
            }
            SamplerKind::Gibbs { .. } => unreachable!("handled in sample_n"),
        }
    }
}

fn gibbs<R: Rng + ?Sized>(
    cosine: bool,
    kappa: &[f64],
    w: &[Vec<f64>],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let d = kappa.len();
    let mut y: Vec<f64> = vec![0.0; d];
    let mut out = Vec::with_capacity(n);
    let sweeps = GIBBS_BURN_IN + n * GIBBS_THIN;
    for it in 0..sweeps {
        for j in 0..d {
            let mut a = kappa[j];
            let mut b: f64 = 0.0;
            for k in 0..d {
                if k == j {
                    continue;
                }
                let (s, c) = y[k].sin_cos();
                b += w[j][k] * s;
                if cosine {
                    a += w[j][k] * c;
                }
            }
            y[j] = wrap_angle(b.atan2(a) + sample_von_mises(a.hypot(b), rng)?);
        }
        if it >= GIBBS_BURN_IN && (it - GIBBS_BURN_IN) % GIBBS_THIN == GIBBS_THIN - 1 {
            out.push(y.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bessel_i_ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_cos(xs: &[f64]) -> f64 {
        xs.iter().map(|x| x.cos()).sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn von_mises_resultant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &k in &[0.3, 2.0, 50.0] {
            let xs: Vec<f64> = (0..100_000).map(|_| sample_von_mises(k, &mut rng).unwrap()).collect();
            let expect = bessel_i_ratio(k);
            // sd of cos under vM is below 1 / sqrt(2)
            assert!((mean_cos(&xs) - expect).abs() < 4.0 * 0.71 / 300.0, "kappa {k}");
            assert!(xs.iter().all(|x| (-PI..PI).contains(x)));
        }
    }

    #[test]
    fn wrapped_cauchy_resultant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_wrapped_cauchy(0.6, &mut rng)).collect();
        assert!((mean_cos(&xs) - 0.6).abs() < 0.01);
    }

    #[test]
    fn envelope_dominates_marginal() {
        for (cosine, k1, k2, r) in [(false, 50.0, 50.0, -5.0f64), (true, 0.5, 2.0, -5.0), (false, 1.0, 1.0, 4.0)] {
            let env = Envelope::new(|y| bivariate_marginal(cosine, k1, k2, r, y), k1 + r.abs());
            for i in 0..20_000 {
                let y = -PI + TAU * (i as f64 + 0.37) / 20_000.0;
                let bin = (((y + PI) / env.width) as usize).min(ENVELOPE_BINS - 1);
                assert!(bivariate_marginal(cosine, k1, k2, r, y) <= env.log_bound[bin] + 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let p = FamilyParams::sine(2.0, 2.0, 1.0).unwrap();
        let s = BaseSampler::new(&p).unwrap();
        let a = s.sample_n(50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = s.sample_n(50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gibbs_is_flagged_approximate() {
        let p = FamilyParams::new(Family::Sine, 3, vec![2.0, 2.0, 2.0], vec![0.3, 0.0, -0.2]).unwrap();
        let s = BaseSampler::new(&p).unwrap();
        assert!(!s.is_exact());
        let draws = s.sample_n(2000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(draws.len(), 2000);
        let c: f64 = draws.iter().map(|y| y[0].cos()).sum::<f64>() / 2000.0;
        assert!(c > 0.5);
    }
}
