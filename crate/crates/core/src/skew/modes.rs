//! Mode search for bivariate densities.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::SkewModel;
use crate::error::{Error, Result};
use crate::families::Family;
use crate::torus::{wrap_angle, TorusPoint};

pub const DEFAULT_MODE_GRID: usize = 360;
pub const DEFAULT_REFINE_TOL: f64 = 1e-8;

const MERGE_RADIUS: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;
const MAX_NEWTON: usize = 200;

/// A local maximum. `ridge_axes` lists coordinates along which the density is
/// constant, so that the location is arbitrary in those coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub location: TorusPoint,
    pub density: f64,
    pub ridge_axes: Vec<usize>,
}

/// Local maxima of a bivariate skewed density, sorted by density descending.
///
/// A `grid_n x grid_n` scan picks candidate cells that dominate their eight
/// toroidal neighbours; each is refined by Newton ascent until the gradient
/// norm is below `refine_tol`, and refined points within `1e-4` are merged.
/// A uniform base is handled in closed form.
pub fn find_modes(model: &SkewModel, grid_n: usize, refine_tol: f64) -> Result<Vec<Mode>> {
    if model.dim() != 2 {
        return Err(Error::UnsupportedDimension(model.dim()));
    }
    if model.family() == Family::Uniform {
        return Ok(vec![uniform_mode(model)]);
    }
    let dens = model.density()?;
    find_modes_with(|x| dens.log_density(x), grid_n, refine_tol)
}

/// The cardioid factor peaks at `mu_s + sign(lambda_s) pi/2`; axes with
/// `lambda_s = 0` are flat.
fn uniform_mode(model: &SkewModel) -> Mode {
    let mu = model.mu();
    let l = model.lambda();
    let mut loc = vec![0.0; 2];
    let mut ridge = vec![];
    for s in 0..2 {
        if l[s] == 0.0 {
            loc[s] = mu[s];
            ridge.push(s);
        } else {
            loc[s] = mu[s] + FRAC_PI_2.copysign(l[s]);
        }
    }
    let l1: f64 = l.iter().map(|v| v.abs()).sum();
    Mode { location: TorusPoint::new(loc), density: (1.0 + l1) / (4.0 * PI * PI), ridge_axes: ridge }
}

/// Mode search on an arbitrary smooth bivariate log density.
pub fn find_modes_with<F: Fn(&[f64]) -> f64>(log_density: F, grid_n: usize, refine_tol: f64) -> Result<Vec<Mode>> {
    if grid_n < 3 {
        return Err(Error::Domain(format!("mode grid needs at least 3 points per axis, got {grid_n}")));
    }
    let n = grid_n;
    let h = TAU / n as f64;
    let node = |i: usize| -PI + h * i as f64;
    let mut vals = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            vals[i * n + j] = log_density(&[node(i), node(j)]);
        }
    }
    let at = |i: isize, j: isize| {
        let i = i.rem_euclid(n as isize) as usize;
        let j = j.rem_euclid(n as isize) as usize;
        vals[i * n + j]
    };
    let mut modes: Vec<Mode> = vec![];
    for i in 0..n as isize {
        for j in 0..n as isize {
            let v = at(i, j);
            if !v.is_finite() {
                continue;
            }
            let mut is_max = true;
            'nb: for di in -1..=1 {
                for dj in -1..=1 {
                    if (di, dj) != (0, 0) && at(i + di, j + dj) > v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if !is_max {
                continue;
            }
            let Some(x) = refine(&log_density, [node(i as usize), node(j as usize)], refine_tol) else {
                continue;
            };
            let ridge = ridge_axes(&log_density, &x);
            let loc = TorusPoint::new(x.to_vec());
            let duplicate = modes.iter().any(|m| {
                let d = loc.diff(&m.location);
                m.ridge_axes == ridge && (0..2).filter(|s| !ridge.contains(s)).all(|s| d[s].abs() < MERGE_RADIUS)
            });
            if !duplicate {
                modes.push(Mode { density: log_density(&x).exp(), location: loc, ridge_axes: ridge });
            }
        }
    }
    modes.sort_by(|a, b| b.density.total_cmp(&a.density));
    Ok(modes)
}

fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64; 2]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for s in 0..2 {
        let mut p = *x;
        let mut m = *x;
        p[s] += FD_STEP;
        m[s] -= FD_STEP;
        g[s] = (f(&p) - f(&m)) / (2.0 * FD_STEP);
    }
    g
}

fn hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64; 2]) -> [[f64; 2]; 2] {
    let h = 1e-4;
    let f0 = f(x);
    let shift = |a: f64, b: f64| f(&[x[0] + a, x[1] + b]);
    let h00 = (shift(h, 0.0) - 2.0 * f0 + shift(-h, 0.0)) / (h * h);
    let h11 = (shift(0.0, h) - 2.0 * f0 + shift(0.0, -h)) / (h * h);
    let h01 = (shift(h, h) - shift(h, -h) - shift(-h, h) + shift(-h, -h)) / (4.0 * h * h);
    [[h00, h01], [h01, h11]]
}

/// Newton ascent with a gradient-ascent fallback and backtracking. Returns
/// `None` when the point converges to something other than a strict local
/// maximum (a saddle or a flat direction that is not a ridge).
fn refine<F: Fn(&[f64]) -> f64>(f: &F, start: [f64; 2], tol: f64) -> Option<[f64; 2]> {
    let mut x = start;
    let mut fx = f(&x);
    for _ in 0..MAX_NEWTON {
        let g = gradient(f, &x);
        let gn = g[0].hypot(g[1]);
        if gn <= tol {
            break;
        }
        let hm = hessian(f, &x);
        let det = hm[0][0] * hm[1][1] - hm[0][1] * hm[0][1];
        let neg_def = hm[0][0] < 0.0 && det > 0.0;
        let mut step = if neg_def {
            // -H^{-1} g
            [
                -(hm[1][1] * g[0] - hm[0][1] * g[1]) / det,
                -(-hm[0][1] * g[0] + hm[0][0] * g[1]) / det,
            ]
        } else {
            [g[0] / (1.0 + gn), g[1] / (1.0 + gn)]
        };
        let len = step[0].hypot(step[1]);
        if len > 0.2 {
            step = [step[0] * 0.2 / len, step[1] * 0.2 / len];
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = [wrap_angle(x[0] + t * step[0]), wrap_angle(x[1] + t * step[1])];
            let fc = f(&cand);
            if fc >= fx {
                x = cand;
                fx = fc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let g = gradient(f, &x);
    // allow for finite-difference noise at the final iterate
    if g[0].hypot(g[1]) > tol.max(1e-6 * (1.0 + fx.abs())) {
        return None;
    }
    let hm = hessian(f, &x);
    let det = hm[0][0] * hm[1][1] - hm[0][1] * hm[0][1];
    let flat = |v: f64| v.abs() < 1e-7;
    if (hm[0][0] < 0.0 && det > 0.0) || (flat(hm[0][0]) && flat(hm[0][1]) && hm[1][1] < 0.0)
        || (flat(hm[1][1]) && flat(hm[0][1]) && hm[0][0] < 0.0)
    {
        Some(x)
    } else {
        None
    }
}

/// Axes along which the log density does not change at all.
fn ridge_axes<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64; 2]) -> Vec<usize> {
    let f0 = f(x);
    (0..2)
        .filter(|&s| {
            (1..8).all(|k| {
                let mut p = *x;
                p[s] = wrap_angle(p[s] + TAU * k as f64 / 8.0);
                (f(&p) - f0).abs() < 1e-12 * (1.0 + f0.abs())
            })
        })
        .collect()
}
