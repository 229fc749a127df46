//! Expected Fisher information of a skewed model.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::Result;
use crate::numerics::{NeumaierSum, QuadratureGrid};
use crate::skew::SkewModel;

/// Per-observation Fisher information in the order `(mu, theta, lambda)`.
///
/// With `f` the base density, `S = 1 + lambda' sin y` and `t = d_theta ln f`,
/// `g_j = d_j ln f`, the blocks are
///
/// * `mu mu`: `i0_{mu mu} + lambda_j lambda_k int f cos y_j cos y_k / S`
/// * `mu lambda`: `delta_jk alpha0_{e_k} - lambda_j int f cos y_j sin y_k / S`
/// * `mu theta`: `-sum_s lambda_s int f sin y_s g_j t - lambda_j d_theta alpha0_{e_j}`
/// * `lambda lambda`: `int f sin y_j sin y_k / S`
/// * `lambda theta`: `0`
/// * `theta theta`: `i0_{theta theta}`
///
/// which is the expected outer product of the score. The base information
/// blocks `i0` are integrals of `f g g'` and `f t t'`; the base `mu theta`
/// block vanishes by symmetry. All integrals use `grid`.
pub fn fisher_information(model: &SkewModel, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    let d = model.dim();
    let dens = model.density()?;
    let base = dens.base();
    let t = model.family().theta_len(d);
    let lambda = model.lambda();
    base.dlog_norm_const()?;

    // accumulators
    let mut mumu0 = vec![NeumaierSum::new(); d * d];
    let mut cc = vec![NeumaierSum::new(); d * d];
    let mut cs = vec![NeumaierSum::new(); d * d];
    let mut ss = vec![NeumaierSum::new(); d * d];
    let mut alpha = vec![NeumaierSum::new(); d];
    let mut dalpha = vec![NeumaierSum::new(); d * t];
    let mut sgt = vec![NeumaierSum::new(); d * d * t];
    let mut tt = vec![NeumaierSum::new(); t * t];

    let mut gy = vec![0.0; d];
    let mut th = vec![0.0; t];
    let mut failure = None;
    grid.for_each_node(|y| {
        let f = base.log_density(y).exp();
        if f == 0.0 || failure.is_some() {
            return;
        }
        let s = dens.factor(y);
        base.grad_y(y, &mut gy);
        if let Err(e) = base.theta_score(y, &mut th) {
            failure = Some(e);
            return;
        }
        let sin: Vec<f64> = y.iter().map(|v| v.sin()).collect();
        let cos: Vec<f64> = y.iter().map(|v| v.cos()).collect();
        for j in 0..d {
            alpha[j].add(f * cos[j]);
            for a in 0..t {
                dalpha[j * t + a].add(f * cos[j] * th[a]);
            }
            for k in 0..d {
                mumu0[j * d + k].add(f * gy[j] * gy[k]);
                if s > 0.0 {
                    cc[j * d + k].add(f * cos[j] * cos[k] / s);
                    cs[j * d + k].add(f * cos[j] * sin[k] / s);
                    ss[j * d + k].add(f * sin[j] * sin[k] / s);
                }
                for a in 0..t {
                    sgt[(k * d + j) * t + a].add(f * sin[k] * gy[j] * th[a]);
                }
            }
        }
        for a in 0..t {
            for b in 0..t {
                tt[a * t + b].add(f * th[a] * th[b]);
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let w = grid.weight();
    let v = |acc: &NeumaierSum| acc.value() * w;

    let p = 2 * d + t;
    let (mo, to, lo) = (0, d, d + t);
    let mut info = DMatrix::<f64>::zeros(p, p);
    for j in 0..d {
        for k in 0..d {
            info[(mo + j, mo + k)] = v(&mumu0[j * d + k]) + lambda[j] * lambda[k] * v(&cc[j * d + k]);
            let delta = if j == k { v(&alpha[k]) } else { 0.0 };
            info[(mo + j, lo + k)] = delta - lambda[j] * v(&cs[j * d + k]);
            info[(lo + j, lo + k)] = v(&ss[j * d + k]);
        }
        for a in 0..t {
            let mut acc = -lambda[j] * v(&dalpha[j * t + a]);
            for s in 0..d {
                acc -= lambda[s] * v(&sgt[(s * d + j) * t + a]);
            }
            info[(mo + j, to + a)] = acc;
        }
    }
    for a in 0..t {
        for b in 0..t {
            info[(to + a, to + b)] = v(&tt[a * t + b]);
        }
    }
    // mirror the upper blocks; lambda-theta stays exactly zero
    for i in 0..p {
        for j in 0..i {
            info[(i, j)] = info[(j, i)];
        }
    }
    for j in 0..d {
        for a in 0..t {
            info[(lo + j, to + a)] = 0.0;
            info[(to + a, lo + j)] = 0.0;
        }
    }
    let eig = SymmetricEigen::new(info.clone());
    let smallest = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest < 1e-10 {
        log::warn!("Fisher information is near singular (smallest eigenvalue {smallest:e})");
    }
    Ok(info)
}
