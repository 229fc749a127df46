//! Smooth unconstrained coordinates for the fitted parameters.
//!
//! `u = (mu, theta_raw, lambda_raw)` maps onto the natural parameters as
//! follows. Locations are used as they are. Sine/Cosine concentrations are
//! `KAPPA_FLOOR + exp(u)` and their dependence parameters are unconstrained.
//! Wrapped Cauchy concentrations are `logistic(u)` and `r = tanh(u)`. The
//! skewness maps onto the open l1-ball: `tanh` for `d = 1`, the rotated square
//! `((tanh a + tanh b)/2, (tanh a - tanh b)/2)` for `d = 2`, and the radial
//! squash `z / (1 + sum(sqrt(z^2 + eps^2) - eps))` beyond.

use crate::error::Result;
use crate::families::{Family, FamilyParams};
use crate::skew::SkewModel;
use crate::torus::TorusPoint;

/// Lower bound on fitted Sine/Cosine concentrations.
pub const KAPPA_FLOOR: f64 = 1e-6;
/// Distance to the parameter boundary below which an optimum counts as on it.
pub const BOUNDARY_TOL: f64 = 1e-6;

const SQUASH_EPS: f64 = 0.1;
const ATANH_CLAMP: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layout {
    pub family: Family,
    pub d: usize,
    pub t: usize,
    pub skewed: bool,
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn atanh_clamped(x: f64) -> f64 {
    x.clamp(-ATANH_CLAMP, ATANH_CLAMP).atanh()
}

impl Layout {
    pub fn new(family: Family, d: usize, skewed: bool) -> Self {
        Layout { family, d, t: family.theta_len(d), skewed }
    }

    /// Number of free (optimized) coordinates.
    pub fn n_free(&self) -> usize {
        self.d + self.t + if self.skewed { self.d } else { 0 }
    }

    /// Length of the natural vector `(mu, theta, lambda)`, always with lambda.
    pub fn n_natural(&self) -> usize {
        2 * self.d + self.t
    }

    fn theta_from_raw(&self, raw: &[f64]) -> Vec<f64> {
        match self.family {
            Family::Uniform => vec![],
            Family::Sine | Family::Cosine => raw
                .iter()
                .enumerate()
                .map(|(i, u)| if i < self.d { KAPPA_FLOOR + u.exp() } else { *u })
                .collect(),
            Family::WrappedCauchy => vec![logistic(raw[0]), logistic(raw[1]), raw[2].tanh()],
        }
    }

    /// Derivative of each natural theta entry with respect to its raw coordinate.
    fn theta_jacobian(&self, raw: &[f64]) -> Vec<f64> {
        match self.family {
            Family::Uniform => vec![],
            Family::Sine | Family::Cosine => raw
                .iter()
                .enumerate()
                .map(|(i, u)| if i < self.d { u.exp() } else { 1.0 })
                .collect(),
            Family::WrappedCauchy => {
                let l = |u: f64| {
                    let p = logistic(u);
                    p * (1.0 - p)
                };
                let th = raw[2].tanh();
                vec![l(raw[0]), l(raw[1]), 1.0 - th * th]
            }
        }
    }

    fn theta_to_raw(&self, theta: &[f64]) -> Vec<f64> {
        match self.family {
            Family::Uniform => vec![],
            Family::Sine | Family::Cosine => theta
                .iter()
                .enumerate()
                .map(|(i, v)| if i < self.d { (v - KAPPA_FLOOR).max(1e-12).ln() } else { *v })
                .collect(),
            Family::WrappedCauchy => {
                let logit = |p: f64| {
                    let p = p.clamp(1e-12, 1.0 - 1e-12);
                    (p / (1.0 - p)).ln()
                };
                vec![logit(theta[0]), logit(theta[1]), atanh_clamped(theta[2])]
            }
        }
    }

    /// Skewness and its Jacobian `d lambda_i / d raw_j` (row-major).
    fn lambda_from_raw(&self, raw: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.d;
        match d {
            1 => {
                let t = raw[0].tanh();
                (vec![t], vec![1.0 - t * t])
            }
            2 => {
                let (ta, tb) = (raw[0].tanh(), raw[1].tanh());
                let (da, db) = (0.5 * (1.0 - ta * ta), 0.5 * (1.0 - tb * tb));
                (vec![0.5 * (ta + tb), 0.5 * (ta - tb)], vec![da, db, da, -db])
            }
            _ => {
                let root: Vec<f64> = raw.iter().map(|z| (z * z + SQUASH_EPS * SQUASH_EPS).sqrt()).collect();
                let den = 1.0 + root.iter().map(|r| r - SQUASH_EPS).sum::<f64>();
                let lam: Vec<f64> = raw.iter().map(|z| z / den).collect();
                let mut jac = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        let dd = raw[j] / root[j];
                        jac[i * d + j] = if i == j { 1.0 / den } else { 0.0 } - raw[i] * dd / (den * den);
                    }
                }
                (lam, jac)
            }
        }
    }

    fn lambda_to_raw(&self, lambda: &[f64]) -> Vec<f64> {
        match self.d {
            1 => vec![atanh_clamped(lambda[0])],
            2 => vec![atanh_clamped(lambda[0] + lambda[1]), atanh_clamped(lambda[0] - lambda[1])],
            _ => {
                // z = lambda * D with D = 1 + sum(sqrt((lambda D)^2 + eps^2) - eps); bisect on D
                let l1: f64 = lambda.iter().map(|l| l.abs()).sum::<f64>().min(1.0 - 1e-9);
                let g = |den: f64| {
                    1.0 + lambda.iter().map(|l| ((l * den).powi(2) + SQUASH_EPS.powi(2)).sqrt() - SQUASH_EPS).sum::<f64>()
                        - den
                };
                let (mut lo, mut hi) = (1.0, 2.0 / (1.0 - l1));
                while g(hi) > 0.0 {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let den = 0.5 * (lo + hi);
                lambda.iter().map(|l| l * den).collect()
            }
        }
    }

    pub fn to_model(&self, u: &[f64]) -> Result<SkewModel> {
        let d = self.d;
        let mu = TorusPoint::new(u[..d].to_vec());
        let theta = FamilyParams::from_theta(self.family, d, &self.theta_from_raw(&u[d..d + self.t]))?;
        let lambda = if self.skewed { self.lambda_from_raw(&u[d + self.t..]).0 } else { vec![0.0; d] };
        SkewModel::new(mu, theta, lambda)
    }

    pub fn from_model(&self, m: &SkewModel) -> Vec<f64> {
        let mut u = m.mu().to_vec();
        u.extend(self.theta_to_raw(&m.theta().theta()));
        if self.skewed {
            u.extend(self.lambda_to_raw(m.lambda()));
        }
        u
    }

    /// Gradient with respect to `u` from the gradient with respect to the
    /// natural vector `(mu, theta, lambda)`.
    pub fn chain(&self, u: &[f64], grad_nat: &[f64]) -> Vec<f64> {
        let (d, t) = (self.d, self.t);
        let mut g = Vec::with_capacity(self.n_free());
        g.extend_from_slice(&grad_nat[..d]);
        let jt = self.theta_jacobian(&u[d..d + t]);
        g.extend(grad_nat[d..d + t].iter().zip(&jt).map(|(a, b)| a * b));
        if self.skewed {
            let (_, jac) = self.lambda_from_raw(&u[d + t..]);
            let gl = &grad_nat[d + t..];
            for j in 0..d {
                g.push((0..d).map(|i| gl[i] * jac[i * d + j]).sum());
            }
        }
        g
    }

    /// Whether a model sits within `BOUNDARY_TOL` of the edge of the parameter space.
    pub fn at_boundary(&self, m: &SkewModel) -> bool {
        let th = m.theta();
        let near = |v: f64| v < BOUNDARY_TOL;
        let theta_edge = match self.family {
            Family::Uniform => false,
            Family::Sine | Family::Cosine => th.kappa().iter().any(|k| near(k - KAPPA_FLOOR)),
            Family::WrappedCauchy => {
                th.kappa().iter().any(|k| near(*k) || near(1.0 - k)) || near(1.0 - th.dep()[0].abs())
            }
        };
        let l1: f64 = m.lambda().iter().map(|l| l.abs()).sum();
        theta_edge || (self.skewed && near(1.0 - l1))
    }

    /// Names of the free parameters in natural order.
    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = (1..=self.d).map(|s| format!("mu{s}")).collect();
        v.extend(self.family.theta_names(self.d));
        if self.skewed {
            v.extend((1..=self.d).map(|s| format!("lambda{s}")));
        }
        v
    }

    /// Indices of the free parameters within the natural vector.
    pub fn free_indices(&self) -> Vec<usize> {
        let n = if self.skewed { self.n_natural() } else { self.d + self.t };
        (0..n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layouts() -> Vec<Layout> {
        let mut v = vec![];
        for f in Family::ALL {
            for skewed in [false, true] {
                v.push(Layout::new(f, 2, skewed));
            }
        }
        v.push(Layout::new(Family::Sine, 1, true));
        v.push(Layout::new(Family::Cosine, 3, true));
        v.push(Layout::new(Family::Uniform, 3, true));
        v
    }

    #[test]
    fn round_trip() {
        for l in layouts() {
            let u: Vec<f64> = (0..l.n_free()).map(|i| 0.3 * (i as f64) - 0.7).collect();
            let m = l.to_model(&u).unwrap();
            let back = l.from_model(&m);
            for (a, b) in u.iter().zip(&back) {
                assert!((a - b).abs() < 1e-9, "{l:?}: {u:?} vs {back:?}");
            }
        }
    }

    #[test]
    fn lambda_stays_inside_ball() {
        for d in 1..=3 {
            let l = Layout::new(Family::Uniform, d, true);
            for k in 0..200 {
                let raw: Vec<f64> = (0..d).map(|i| ((k * 7 + i * 13) % 41) as f64 - 20.0).collect();
                let (lam, _) = l.lambda_from_raw(&raw);
                assert!(lam.iter().map(|v| v.abs()).sum::<f64>() <= 1.0);
            }
        }
    }

    #[test]
    fn chain_rule_matches_finite_differences() {
        for l in layouts() {
            let u: Vec<f64> = (0..l.n_free()).map(|i| 0.2 * (i as f64) - 0.5).collect();
            // linear functional of the natural vector
            let w: Vec<f64> = (0..l.n_natural()).map(|i| 1.0 + i as f64).collect();
            let nat = |u: &[f64]| {
                let m = l.to_model(u).unwrap();
                let mut v = u[..l.d].to_vec();
                v.extend(m.theta().theta());
                v.extend_from_slice(m.lambda());
                v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
            };
            let g = l.chain(&u, &w);
            for i in 0..u.len() {
                let h = 1e-6;
                let mut up = u.clone();
                up[i] += h;
                let mut um = u.clone();
                um[i] -= h;
                let fd = (nat(&up) - nat(&um)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6, "{l:?} coord {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn boundary_detection() {
        let l = Layout::new(Family::WrappedCauchy, 2, true);
        let interior = l.to_model(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.2]).unwrap();
        assert!(!l.at_boundary(&interior));
        let edge = l.to_model(&[0.0, 0.0, 0.0, 0.0, 0.0, 30.0, 0.2]).unwrap();
        assert!(l.at_boundary(&edge));
    }
}
