//! Multi-start maximum-likelihood fitting.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fisher::fisher_information;
use super::likelihood::{check_data, weighted_score};
use super::optimize::bfgs;
use super::param::Layout;
use crate::error::{Error, Result};
use crate::families::{Family, FamilyParams};
use crate::numerics::QuadratureGrid;
use crate::skew::SkewModel;
use crate::torus::{wrap_angle, TorusPoint};

/// Settings for [`fit_mle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of generated starts: the moment start plus `n_starts - 1` jittered ones.
    pub n_starts: usize,
    pub max_iters: usize,
    /// Relative change of the log-likelihood treated as convergence.
    pub tol: f64,
    /// Fit the symmetric submodel `lambda = 0`.
    pub fix_lambda_zero: bool,
    pub seed: u64,
    /// Extra starting models, tried right after the moment start.
    #[serde(default)]
    pub initial: Vec<SkewModel>,
    /// Compute the asymptotic covariance of the winning fit.
    #[serde(default = "default_true")]
    pub compute_cov: bool,
}

fn default_true() -> bool {
    true
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            n_starts: 20,
            max_iters: 500,
            tol: 1e-8,
            fix_lambda_zero: false,
            seed: 0,
            initial: vec![],
            compute_cov: true,
        }
    }
}

/// Outcome of a fit. `cov` is the inverse Fisher information divided by the
/// (weighted) sample size, over the free parameters listed in `param_names`.
/// It is absent when the optimum lies on the boundary of the parameter space
/// or the information matrix is singular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: SkewModel,
    pub skewed: bool,
    pub log_lik: f64,
    pub cov: Option<DMatrix<f64>>,
    pub boundary: bool,
    pub converged: bool,
    pub n_evals: usize,
    pub start_index: usize,
    pub param_names: Vec<String>,
}

impl FitResult {
    /// Free parameters in the order of `param_names`.
    pub fn estimates(&self) -> Vec<f64> {
        let m = &self.model;
        let mut v = m.mu().to_vec();
        v.extend(m.theta().theta());
        if self.skewed {
            v.extend_from_slice(m.lambda());
        }
        v
    }

    /// Asymptotic standard errors, when available.
    pub fn std_errors(&self) -> Option<Vec<f64>> {
        self.cov.as_ref().map(|c| c.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect())
    }
}

/// Inverse of the von Mises mean resultant length `A(kappa)`.
pub(crate) fn a_inverse(r: f64) -> f64 {
    let k = if r < 0.53 {
        2.0 * r + r.powi(3) + 5.0 * r.powi(5) / 6.0
    } else if r < 0.85 {
        -0.4 + 1.39 * r + 0.43 / (1.0 - r)
    } else {
        1.0 / (r.powi(3) - 4.0 * r * r + 3.0 * r)
    };
    k.clamp(0.05, 300.0)
}

/// Circular means and mean resultant lengths per coordinate.
pub(crate) fn circular_moments(data: &[TorusPoint], weights: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    let d = data[0].dim();
    let mut c = vec![0.0; d];
    let mut s = vec![0.0; d];
    let mut total = 0.0;
    for (i, x) in data.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        total += w;
        for k in 0..d {
            c[k] += w * x[k].cos();
            s[k] += w * x[k].sin();
        }
    }
    let mean = (0..d).map(|k| s[k].atan2(c[k])).collect();
    let rbar = (0..d).map(|k| (c[k].hypot(s[k]) / total).min(1.0)).collect();
    (mean, rbar)
}

/// Moment start: circular means for `mu`, `A^{-1}(R)` for Sine/Cosine
/// concentrations, `R` itself for wrapped Cauchy, zero dependence and skewness.
pub(crate) fn moment_start(family: Family, data: &[TorusPoint], weights: Option<&[f64]>) -> Result<SkewModel> {
    let (mean, rbar) = circular_moments(data, weights);
    let d = mean.len();
    let theta = match family {
        Family::Uniform => FamilyParams::uniform(d)?,
        Family::Sine | Family::Cosine => {
            let mut t: Vec<f64> = rbar.iter().map(|r| a_inverse(*r)).collect();
            t.extend(vec![0.0; d * (d - 1) / 2]);
            FamilyParams::from_theta(family, d, &t)?
        }
        Family::WrappedCauchy => FamilyParams::wrapped_cauchy(rbar[0].clamp(0.01, 0.95), rbar[1].clamp(0.01, 0.95), 0.0)?,
    };
    SkewModel::symmetric(TorusPoint::new(mean), theta)
}

/// Jittered start number `k`. Location and base parameters are drawn before
/// the skewness so that symmetric and skewed fits share them.
fn jittered_start(layout: &Layout, base: &SkewModel, seed: u64, k: usize) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let d = layout.d;
    let mu: Vec<f64> = base.mu().iter().map(|m| m + rng.gen_range(-0.5..0.5) * std::f64::consts::PI).collect();
    let th = base.theta();
    let theta: Vec<f64> = match layout.family {
        Family::Uniform => vec![],
        Family::Sine | Family::Cosine => {
            let mut t: Vec<f64> = th
                .kappa()
                .iter()
                .map(|k| k * (0.5 * rng.sample::<f64, _>(StandardNormal)).exp())
                .collect();
            t.extend((0..th.dep().len()).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)));
            t
        }
        Family::WrappedCauchy => {
            let mut t: Vec<f64> = th
                .kappa()
                .iter()
                .map(|k| (k * (0.5 * rng.sample::<f64, _>(StandardNormal)).exp()).clamp(0.01, 0.95))
                .collect();
            t.push(rng.gen_range(-0.5..0.5));
            t
        }
    };
    let lambda_raw: Vec<f64> = (0..d).map(|_| 0.7 * rng.sample::<f64, _>(StandardNormal)).collect();
    let model = SkewModel::symmetric(TorusPoint::new(mu), FamilyParams::from_theta(layout.family, d, &theta)?)?;
    let mut u = Layout { skewed: false, ..*layout }.from_model(&model);
    if layout.skewed {
        u.extend(lambda_raw);
    }
    Ok(u)
}

/// Objective `-l(u) / W` and its gradient.
fn objective(layout: &Layout, data: &[TorusPoint], weights: Option<&[f64]>, total: f64, u: &[f64]) -> Option<(f64, Vec<f64>)> {
    let model = layout.to_model(u).ok()?;
    let dens = model.density().ok()?;
    let (ll, grad) = weighted_score(&dens, data, weights).ok()?;
    if !ll.is_finite() {
        return None;
    }
    let g = layout.chain(u, &grad);
    Some((-ll / total, g.iter().map(|v| -v / total).collect()))
}

pub(crate) struct LocalFit {
    pub model: SkewModel,
    pub log_lik: f64,
    pub converged: bool,
    pub n_evals: usize,
}

/// One local optimization from `start`.
pub(crate) fn local_fit(
    layout: &Layout,
    data: &[TorusPoint],
    weights: Option<&[f64]>,
    start: &[f64],
    max_iters: usize,
    tol: f64,
) -> LocalFit {
    let total: f64 = weights.map_or(data.len() as f64, |w| w.iter().sum());
    let res = bfgs(|u| objective(layout, data, weights, total, u), start, max_iters, tol);
    let model = layout.to_model(&res.x).ok();
    match model {
        Some(model) if res.f.is_finite() => LocalFit {
            model,
            log_lik: -res.f * total,
            converged: res.converged,
            n_evals: res.n_evals,
        },
        _ => LocalFit {
            model: layout.to_model(start).unwrap_or_else(|_| layout.to_model(&vec![0.0; start.len()]).expect("origin is valid")),
            log_lik: f64::NEG_INFINITY,
            converged: false,
            n_evals: res.n_evals,
        },
    }
}

/// Refine `start` on weighted data with a single local run.
pub(crate) fn refine_weighted(
    start: &SkewModel,
    skewed: bool,
    data: &[TorusPoint],
    weights: &[f64],
    max_iters: usize,
    tol: f64,
) -> LocalFit {
    let layout = Layout::new(start.family(), start.dim(), skewed);
    let u0 = layout.from_model(start);
    local_fit(&layout, data, Some(weights), &u0, max_iters, tol)
}

/// Maximum-likelihood fit of a (skewed or symmetric) model.
pub fn fit_mle(family: Family, skewed: bool, data: &[TorusPoint], options: &FitOptions) -> Result<FitResult> {
    fit_weighted(family, skewed, data, None, options)
}

/// Weighted maximum-likelihood fit, maximizing `sum_i w_i ln g(x_i)`.
pub fn fit_weighted(
    family: Family,
    skewed: bool,
    data: &[TorusPoint],
    weights: Option<&[f64]>,
    options: &FitOptions,
) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let d = data[0].dim();
    check_data(data, d)?;
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(Error::DimensionMismatch { expected: data.len(), got: w.len() });
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain("weights must be finite and non-negative".into()));
        }
    }
    if options.n_starts == 0 {
        return Err(Error::Domain("n_starts must be at least 1".into()));
    }
    let skewed = skewed && !options.fix_lambda_zero;
    let layout = Layout::new(family, d, skewed);
    // validate the family/dimension pairing early
    FamilyParams::from_theta(family, d, &vec![0.5; layout.t]).map_err(|e| match e {
        Error::Domain(_) => Error::Fit(format!("{family} is not defined for d = {d}")),
        other => other,
    })?;
    let total: f64 = weights.map_or(data.len() as f64, |w| w.iter().sum());
    if total < (layout.n_free() + 5) as f64 {
        return Err(Error::Fit(format!(
            "need at least {} observations for {} free parameters, got {total}",
            layout.n_free() + 5,
            layout.n_free()
        )));
    }

    let moment = moment_start(family, data, weights)?;
    let mut starts = vec![layout.from_model(&moment)];
    for m in &options.initial {
        if m.family() != family || m.dim() != d {
            return Err(Error::Fit("initial model does not match the fitted family or dimension".into()));
        }
        starts.push(layout.from_model(m));
    }
    for k in 1..options.n_starts {
        starts.push(jittered_start(&layout, &moment, options.seed, k)?);
    }

    let runs: Vec<LocalFit> = starts
        .par_iter()
        .map(|u| local_fit(&layout, data, weights, u, options.max_iters, options.tol))
        .collect();
    let n_evals = runs.iter().map(|r| r.n_evals).sum();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.log_lik > runs[best].log_lik {
            best = i;
        }
    }
    let win = &runs[best];
    if !win.log_lik.is_finite() {
        return Err(Error::Fit("zero likelihood under every start".into()));
    }
    let model = if family == Family::Uniform { canonical_uniform(&win.model)? } else { win.model.clone() };
    let boundary = layout.at_boundary(&model);
    let cov = if options.compute_cov && !boundary {
        covariance(&layout, &model, total)
    } else {
        None
    };
    Ok(FitResult {
        model,
        skewed,
        log_lik: win.log_lik,
        cov,
        boundary,
        converged: win.converged,
        n_evals,
        start_index: best,
        param_names: layout.names(),
    })
}

/// Over a uniform base `(mu_s, lambda_s)` and `(mu_s + pi, -lambda_s)` give
/// the same density; report the representative with `lambda_s >= 0`.
fn canonical_uniform(model: &SkewModel) -> Result<SkewModel> {
    let mut mu = model.mu().to_vec();
    let mut lambda = model.lambda().to_vec();
    for (m, l) in mu.iter_mut().zip(lambda.iter_mut()) {
        if *l < 0.0 {
            *m = wrap_angle(*m + PI);
            *l = -*l;
        }
    }
    SkewModel::new(TorusPoint::new(mu), model.theta().clone(), lambda)
}

fn covariance(layout: &Layout, model: &SkewModel, n: f64) -> Option<DMatrix<f64>> {
    let grid = QuadratureGrid::default_for(layout.d);
    let info = match fisher_information(model, &grid) {
        Ok(i) => i,
        Err(e) => {
            log::warn!("Fisher information failed: {e}");
            return None;
        }
    };
    let idx = layout.free_indices();
    let sub = info.select_rows(&idx).select_columns(&idx);
    match sub.clone().cholesky() {
        Some(ch) => Some(ch.inverse() / n),
        None => {
            log::warn!("Fisher information is not positive definite; no covariance reported");
            None
        }
    }
}
