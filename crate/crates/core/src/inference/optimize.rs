//! Quasi-Newton minimization (BFGS with Armijo backtracking).

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
    pub n_evals: usize,
}

const ARMIJO: f64 = 1e-4;
const MAX_STEP: f64 = 2.0;
const GTOL: f64 = 1e-7;

/// Minimize `f` from `x0`. The objective returns `None` (or a non-finite
/// value) outside its domain, which the line search treats as a failed step.
///
/// Stops when the gradient sup-norm drops below `1e-7 (1 + |f|)`, or when the
/// relative decrease falls below `tol` while the gradient is below
/// `1e-5 (1 + |f|)`.
pub(crate) fn bfgs<F>(mut f: F, x0: &[f64], max_iters: usize, tol: f64) -> Minimum
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut evals = 1;
    let (mut fx, g0) = match f(x0) {
        Some((v, g)) if v.is_finite() && g.iter().all(|x| x.is_finite()) => (v, g),
        _ => return Minimum { x: x0.to_vec(), f: f64::INFINITY, converged: false, n_evals: evals },
    };
    let mut x = DVector::from_column_slice(x0);
    let mut g = DVector::from_vec(g0);
    if n == 0 {
        return Minimum { x: vec![], f: fx, converged: true, n_evals: evals };
    }
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut converged = false;
    for _ in 0..max_iters {
        if g.amax() <= GTOL * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
        let mut p = -(&h * &g);
        let mut slope = p.dot(&g);
        if !(slope < 0.0) {
            h = DMatrix::identity(n, n);
            fresh = true;
            p = -g.clone();
            slope = p.dot(&g);
        }
        let pmax = p.amax();
        if pmax > MAX_STEP {
            p *= MAX_STEP / pmax;
            slope *= MAX_STEP / pmax;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let xn = &x + t * &p;
            evals += 1;
            if let Some((fnew, gnew)) = f(xn.as_slice()) {
                if fnew.is_finite() && gnew.iter().all(|v| v.is_finite()) && fnew <= fx + ARMIJO * t * slope {
                    accepted = Some((xn, fnew, DVector::from_vec(gnew)));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            if fresh {
                // no descent even along the gradient: as good as it gets
                converged = g.amax() <= 1e-4 * (1.0 + fx.abs());
                break;
            }
            h = DMatrix::identity(n, n);
            fresh = true;
            continue;
        };
        let s = &xn - &x;
        let y = &gnew - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s hy' + hy s') + (rho^2 y'Hy + rho) s s'
            h -= rho * (&s * hy.transpose() + &hy * s.transpose());
            h += (rho * rho * yhy + rho) * (&s * s.transpose());
            fresh = false;
        }
        let decrease = fx - fnew;
        x = xn;
        fx = fnew;
        g = gnew;
        if decrease <= tol * (1.0 + fx.abs()) && g.amax() <= 1e-5 * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
    }
    Minimum { x: x.as_slice().to_vec(), f: fx, converged, n_evals: evals }
}
