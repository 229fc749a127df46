//! Tensor-product quadrature on the torus and on boxes.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Equispaced tensor grid on `[-pi, pi)^d` with equal weights `(2 pi / N)^d`.
///
/// On a periodic domain the trapezoidal and midpoint rules coincide up to a
/// shift and converge exponentially for smooth integrands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureGrid {
    dim: usize,
    points_per_dim: usize,
}

impl QuadratureGrid {
    pub fn new(dim: usize, points_per_dim: usize) -> Result<Self> {
        if dim == 0 || points_per_dim == 0 {
            return Err(Error::Domain("quadrature grid needs dim >= 1 and N >= 1".into()));
        }
        Ok(QuadratureGrid { dim, points_per_dim })
    }

    /// Default resolution: 1024 nodes for circles, 256 per axis for d = 2,
    /// 64 for d = 3 and 24 beyond.
    pub fn default_for(dim: usize) -> Self {
        let n = match dim {
            1 => 1024,
            2 => 256,
            3 => 64,
            _ => 24,
        };
        QuadratureGrid { dim: dim.max(1), points_per_dim: n }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn node_count(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    pub fn weight(&self) -> f64 {
        (TAU / self.points_per_dim as f64).powi(self.dim as i32)
    }

    /// The one-dimensional node set `-pi + 2 pi j / N`.
    pub fn nodes_1d(&self) -> Vec<f64> {
        let n = self.points_per_dim;
        (0..n).map(|j| -PI + TAU * j as f64 / n as f64).collect()
    }

    /// Call `f` at every tensor node (last coordinate varies fastest).
    pub fn for_each_node<F: FnMut(&[f64])>(&self, mut f: F) {
        let axis = self.nodes_1d();
        let n = self.points_per_dim;
        let mut idx = vec![0usize; self.dim];
        let mut x: Vec<f64> = vec![axis[0]; self.dim];
        loop {
            f(&x);
            // odometer increment
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < n {
                    x[k] = axis[idx[k]];
                    break;
                }
                idx[k] = 0;
                x[k] = axis[0];
            }
        }
    }
}

/// Equal-weight tensor quadrature of `f` over the torus.
pub fn torus_integrate<F: FnMut(&[f64]) -> f64>(mut f: F, grid: &QuadratureGrid) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    let mut bad: Option<Vec<f64>> = None;
    grid.for_each_node(|x| {
        if bad.is_some() {
            return;
        }
        let v = f(x);
        if !v.is_finite() {
            bad = Some(x.to_vec());
            return;
        }
        acc.add(v);
    });
    if let Some(x) = bad {
        return Err(Error::Integration(x));
    }
    Ok(acc.value() * grid.weight())
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = z;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pnm1) = (p1, p0);
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussLegendre { nodes, weights }
}

/// Composite tensor Gauss-Legendre integral of `f` over the box
/// `[lower_1, upper_1] x ... x [lower_d, upper_d]`, with `panels` equal
/// sub-intervals per axis and an `order`-point rule on each.
pub fn box_integrate<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lower: &[f64],
    upper: &[f64],
    panels: usize,
    order: usize,
) -> Result<f64> {
    let d = lower.len();
    if upper.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: upper.len() });
    }
    if lower.iter().zip(upper).any(|(a, b)| b <= a) {
        return Ok(0.0);
    }
    let rule = gauss_legendre(order);
    // per-axis 1-d composite nodes and weights
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
        .map(|k| {
            let h = (upper[k] - lower[k]) / panels as f64;
            let mut xs = Vec::with_capacity(panels * order);
            let mut ws = Vec::with_capacity(panels * order);
            for p in 0..panels {
                let a = lower[k] + h * p as f64;
                for (z, w) in rule.nodes.iter().zip(&rule.weights) {
                    xs.push(a + 0.5 * h * (z + 1.0));
                    ws.push(0.5 * h * w);
                }
            }
            (xs, ws)
        })
        .collect();
    let m = panels * order;
    let mut idx = vec![0usize; d];
    let mut x: Vec<f64> = axes.iter().map(|a| a.0[0]).collect();
    let mut acc = NeumaierSum::new();
    loop {
        let w: f64 = idx.iter().enumerate().map(|(k, &i)| axes[k].1[i]).product();
        let v = f(&x);
        if !v.is_finite() {
            return Err(Error::Integration(x));
        }
        acc.add(w * v);
        let mut k = d;
        loop {
            if k == 0 {
                return Ok(acc.value());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < m {
                x[k] = axes[k].0[idx[k]];
                break;
            }
            idx[k] = 0;
            x[k] = axes[k].0[0];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bessel_i;
    use approx::assert_relative_eq;

    #[test]
    fn grid_invariants() {
        for (d, n) in [(1, 7), (2, 16), (3, 5)] {
            let g = QuadratureGrid::new(d, n).unwrap();
            let mut count = 0;
            g.for_each_node(|x| {
                assert!(x.iter().all(|v| (-PI..PI).contains(v)));
                count += 1;
            });
            assert_eq!(count, n.pow(d as u32));
            assert_eq!(g.node_count(), count);
            assert_relative_eq!(g.weight() * count as f64, TAU.powi(d as i32), max_relative = 1e-14);
        }
    }

    #[test]
    fn constant_and_odd_integrands() {
        let g = QuadratureGrid::new(2, 64).unwrap();
        assert_relative_eq!(torus_integrate(|_| 1.0, &g).unwrap(), 39.478_417_604_357_43, max_relative = 1e-14);
        assert!(torus_integrate(|x| x[0].sin(), &g).unwrap().abs() < 1e-14);
    }

    #[test]
    fn exp_cos_matches_bessel() {
        let g = QuadratureGrid::new(1, 256).unwrap();
        let v = torus_integrate(|x| x[0].cos().exp(), &g).unwrap();
        let exact = TAU * bessel_i(0, 1.0).unwrap();
        assert_relative_eq!(v, exact, max_relative = 1e-14);
        assert_relative_eq!(v, 7.954_926_521_012_845, max_relative = 1e-12);
    }

    #[test]
    fn nonfinite_integrand_is_an_error() {
        let g = QuadratureGrid::new(1, 8).unwrap();
        assert!(matches!(torus_integrate(|_| f64::NAN, &g), Err(Error::Integration(_))));
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in [1usize, 2, 5, 10, 16] {
            let r = gauss_legendre(n);
            assert_relative_eq!(r.weights.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
            // integrates x^(2n-2) exactly
            let p = 2 * n - 2;
            let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
            assert_relative_eq!(v, 2.0 / (p as f64 + 1.0), max_relative = 1e-13);
        }
    }

    #[test]
    fn box_integral() {
        let v = box_integrate(|x| x[0].cos() * x[1].cos(), &[0.0, 0.0], &[1.0, 2.0], 4, 8).unwrap();
        assert_relative_eq!(v, 1f64.sin() * 2f64.sin(), max_relative = 1e-14);
        assert_eq!(box_integrate(|_| 1.0, &[0.0], &[0.0], 2, 4).unwrap(), 0.0);
    }
}
