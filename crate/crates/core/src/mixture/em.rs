//! Expectation-maximization for mixtures.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::angular_kmeans;
use super::{component_log_terms, component_param_count, mixture_param_count, MixtureModel, ModelScore};
use crate::error::{Error, Result};
use crate::families::{Family, FamilyParams};
use crate::inference::{fit_mle, moment_start, refine_weighted, weighted_log_likelihood, FitOptions, SymmetryTestResult};
use crate::numerics::log_sum_exp;
use crate::torus::TorusPoint;

/// Components lighter than this are degenerate.
pub const MIN_WEIGHT: f64 = 1e-4;
const MAX_RESTARTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureOptions {
    /// Number of k-means initial partitions.
    pub n_init: usize,
    /// EM iterations per initial partition.
    pub max_iters: usize,
    /// Relative change of the log-likelihood that stops EM.
    pub tol: f64,
    /// Quasi-Newton iterations per M-step.
    pub m_step_iters: usize,
    /// Starts for the single-component fit (`K = 1`).
    pub n_starts: usize,
    pub seed: u64,
    /// An extra starting mixture, run in addition to the partitions.
    #[serde(default)]
    pub initial: Option<MixtureModel>,
}

impl Default for MixtureOptions {
    fn default() -> Self {
        MixtureOptions { n_init: 5, max_iters: 300, tol: 1e-8, m_step_iters: 50, n_starts: 20, seed: 0, initial: None }
    }
}

impl MixtureOptions {
    /// Options for the single-component fit that `K = 1` delegates to.
    pub fn single_fit_options(&self) -> FitOptions {
        FitOptions {
            n_starts: self.n_starts,
            tol: self.tol,
            seed: self.seed,
            initial: self.initial.iter().map(|m| m.components()[0].clone()).collect(),
            compute_cov: false,
            ..FitOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub model: MixtureModel,
    pub score: ModelScore,
    pub skewed: bool,
    pub converged: bool,
    pub iterations: usize,
    /// Observed-data log-likelihood after each EM iteration, starting value first.
    pub trace: Vec<f64>,
}

/// Log-likelihood and the responsibilities, stored component-major.
fn e_step(model: &MixtureModel, data: &[TorusPoint]) -> Result<(f64, Vec<Vec<f64>>)> {
    let dens = model.densities()?;
    let ln_w: Vec<f64> = model.weights().iter().map(|w| w.ln()).collect();
    let k = dens.len();
    let rows: Vec<(f64, Vec<f64>)> = data
        .par_iter()
        .map(|x| {
            let mut t = vec![0.0; k];
            component_log_terms(&dens, &ln_w, x, &mut t);
            let l = log_sum_exp(&t);
            (l, t.iter().map(|v| (v - l).exp()).collect())
        })
        .collect();
    let ll: f64 = rows.iter().map(|r| r.0).sum();
    if !ll.is_finite() {
        return Err(Error::Fit("a point has zero density under every component".into()));
    }
    let resp = (0..k).map(|j| rows.iter().map(|r| r.1[j]).collect()).collect();
    Ok((ll, resp))
}

fn check_components(resp: &[Vec<f64>], n: usize, c: usize) -> Result<Vec<f64>> {
    let nk: Vec<f64> = resp.iter().map(|r| r.iter().sum()).collect();
    for (j, m) in nk.iter().enumerate() {
        if m / (n as f64) < MIN_WEIGHT || *m < (c + 2) as f64 {
            return Err(Error::DegenerateComponent(format!(
                "component {j} has effective size {m:.2} (weight {:.2e})",
                m / n as f64
            )));
        }
    }
    Ok(nk)
}

fn run_em(skewed: bool, data: &[TorusPoint], init: MixtureModel, opts: &MixtureOptions) -> Result<MixtureFit> {
    let n = data.len();
    let c = component_param_count(init.family(), init.dim(), skewed);
    let mut model = init;
    let (mut ll, mut resp) = e_step(&model, data)?;
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iters {
        iterations += 1;
        let nk = check_components(&resp, n, c)?;
        let weights: Vec<f64> = nk.iter().map(|m| m / n as f64).collect();
        let comps: Vec<_> = model
            .components()
            .par_iter()
            .zip(resp.par_iter())
            .map(|(comp, r)| {
                let old = weighted_log_likelihood(&comp.density()?, data, Some(r));
                let fit = refine_weighted(comp, skewed, data, r, opts.m_step_iters, opts.tol);
                // a generalized M-step: only accept improvements
                Ok(if fit.log_lik.is_finite() && fit.log_lik >= old { fit.model } else { comp.clone() })
            })
            .collect::<Result<_>>()?;
        let total: f64 = weights.iter().sum();
        model = MixtureModel::new(comps, weights.iter().map(|w| w / total).collect())?;
        let (new_ll, new_resp) = e_step(&model, data)?;
        trace.push(new_ll);
        if new_ll < ll - 1e-9 * (1.0 + ll.abs()) {
            log::warn!("EM log-likelihood decreased from {ll} to {new_ll}");
        }
        let rel = (new_ll - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
        ll = new_ll;
        resp = new_resp;
        if rel < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("EM did not converge in {} iterations", opts.max_iters);
    }
    let score = ModelScore::new(ll, mixture_param_count(model.family(), model.dim(), skewed, model.n_components()), n);
    Ok(MixtureFit { model, score, skewed, converged, iterations, trace })
}

/// Starting mixture from a hard partition: moment starts per cluster.
fn partition_start(family: Family, k: usize, data: &[TorusPoint], labels: &[usize], c: usize) -> Result<MixtureModel> {
    let n = data.len();
    let mut comps = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for j in 0..k {
        let w: Vec<f64> = labels.iter().map(|&l| if l == j { 1.0 } else { 0.0 }).collect();
        let size: f64 = w.iter().sum();
        if size < (c + 2) as f64 || size / (n as f64) < MIN_WEIGHT {
            return Err(Error::DegenerateComponent(format!("initial cluster {j} has {size} points")));
        }
        comps.push(moment_start(family, data, Some(&w))?);
        weights.push(size / n as f64);
    }
    MixtureModel::new(comps, weights)
}

/// EM from `n_init` k-means partitions, each retried on degeneracy.
fn em_from_partitions(
    family: Family,
    skewed: bool,
    k: usize,
    data: &[TorusPoint],
    opts: &MixtureOptions,
    init: usize,
) -> Result<MixtureFit> {
    let c = component_param_count(family, data[0].dim(), skewed);
    let mut last = None;
    for attempt in 0..=MAX_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream((init * (MAX_RESTARTS + 1) + attempt) as u64);
        let labels = angular_kmeans(data, k, &mut rng);
        let res = partition_start(family, k, data, &labels, c).and_then(|m| run_em(skewed, data, m, opts));
        match res {
            Err(e @ Error::DegenerateComponent(_)) => {
                log::info!("restarting EM from a fresh partition: {e}");
                last = Some(e);
            }
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Fit a `K`-component mixture by EM. `K = 1` is a plain maximum-likelihood
/// fit. Non-convergence is flagged on the result, which holds the last iterate.
pub fn fit_mixture(
    family: Family,
    skewed: bool,
    k: usize,
    data: &[TorusPoint],
    options: &MixtureOptions,
) -> Result<MixtureFit> {
    if k == 0 {
        return Err(Error::Domain("a mixture needs at least one component".into()));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let d = data[0].dim();
    if let Some(p) = data.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
    }
    FamilyParams::from_theta(family, d, &vec![0.5; family.theta_len(d)])
        .map_err(|_| Error::Fit(format!("{family} is not defined for d = {d}")))?;
    if let Some(m) = &options.initial {
        if m.family() != family || m.dim() != d || m.n_components() != k {
            return Err(Error::Fit("initial mixture does not match the requested model".into()));
        }
    }
    let n = data.len();
    let c = component_param_count(family, d, skewed);
    if n < k * c + k {
        return Err(Error::Fit(format!("need at least {} observations, got {n}", k * c + k)));
    }

    if k == 1 {
        let fit = fit_mle(family, skewed, data, &options.single_fit_options())?;
        let score = ModelScore::new(fit.log_lik, mixture_param_count(family, d, skewed, 1), n);
        return Ok(MixtureFit {
            model: MixtureModel::single(fit.model),
            score,
            skewed,
            converged: fit.converged,
            iterations: 0,
            trace: vec![fit.log_lik],
        });
    }

    let mut jobs: Vec<Option<usize>> = (0..options.n_init.max(1)).map(Some).collect();
    if options.initial.is_some() {
        jobs.push(None);
    }
    let runs: Vec<Result<MixtureFit>> = jobs
        .par_iter()
        .map(|job| match job {
            Some(i) => em_from_partitions(family, skewed, k, data, options, *i),
            None => run_em(skewed, data, options.initial.clone().expect("checked above"), options),
        })
        .collect();
    let mut best: Option<MixtureFit> = None;
    let mut first_err = None;
    for r in runs {
        match r {
            Ok(f) => {
                if best.as_ref().map_or(true, |b| f.score.log_lik > b.score.log_lik) {
                    best = Some(f);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one run"))
}

/// Likelihood-ratio test of `lambda = 0` in every component, with `K d`
/// degrees of freedom. The skewed EM also starts from the symmetric optimum.
pub fn mixture_symmetry_test(
    family: Family,
    k: usize,
    data: &[TorusPoint],
    options: &MixtureOptions,
) -> Result<(SymmetryTestResult, MixtureFit, MixtureFit)> {
    let sym = fit_mixture(family, false, k, data, options)?;
    let opts = MixtureOptions { initial: Some(sym.model.clone()), ..options.clone() };
    let skew = fit_mixture(family, true, k, data, &opts)?;
    let df = (k * data[0].dim()) as u32;
    let res = SymmetryTestResult::from_log_liks(sym.score.log_lik, skew.score.log_lik, df)?;
    Ok((res, sym, skew))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{bfgs, fisher_information, weighted_score, Layout};
    use crate::numerics::QuadratureGrid;
    use crate::skew::{sample, SkewModel};

    fn draw(mix: &MixtureModel, n: usize, seed: u64) -> Vec<TorusPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![];
        let n1 = (n as f64 * mix.weights()[0]).round() as usize;
        out.extend(sample(&mix.components()[0], n1, &mut rng).unwrap());
        out.extend(sample(&mix.components()[1], n - n1, &mut rng).unwrap());
        out
    }

    fn separated_sines() -> MixtureModel {
        let a = SkewModel::new(TorusPoint::new(vec![-1.5, -1.0]), FamilyParams::sine(4.0, 3.0, 1.0).unwrap(), vec![0.5, -0.2]).unwrap();
        let b = SkewModel::new(TorusPoint::new(vec![1.7, 2.0]), FamilyParams::sine(3.0, 5.0, -1.5).unwrap(), vec![-0.3, 0.4]).unwrap();
        MixtureModel::new(vec![a, b], vec![0.4, 0.6]).unwrap()
    }

    fn params(m: &SkewModel) -> Vec<f64> {
        let mut v = m.mu().to_vec();
        v.extend(m.theta().theta());
        v.extend_from_slice(m.lambda());
        v
    }

    #[test]
    fn monotone_and_deterministic() {
        let data = draw(&separated_sines(), 600, 3);
        let opts = MixtureOptions { n_init: 2, ..Default::default() };
        let a = fit_mixture(Family::Sine, true, 2, &data, &opts).unwrap();
        for w in a.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()), "{:?}", a.trace);
        }
        assert!(a.converged);
        let b = fit_mixture(Family::Sine, true, 2, &data, &opts).unwrap();
        assert_eq!(a, b);
        let s = a.score;
        assert_eq!(s.aic, 2.0 * s.k_params as f64 - 2.0 * s.log_lik);
        assert_eq!(s.k_params, 15);
    }

    #[test]
    fn single_component_is_fit_mle() {
        let data = draw(&separated_sines(), 300, 8);
        let opts = MixtureOptions { n_starts: 4, seed: 5, ..Default::default() };
        let mix = fit_mixture(Family::Sine, true, 1, &data, &opts).unwrap();
        let direct = fit_mle(Family::Sine, true, &data, &opts.single_fit_options()).unwrap();
        assert!((mix.score.log_lik - direct.log_lik).abs() <= 1e-8);
        assert_eq!(mix.model.components()[0], direct.model);
    }

    /// Recovery on a well-separated mixture, with standard errors from the
    /// per-component Fisher information at `n w_k` observations.
    #[test]
    fn recovers_separated_mixture() {
        let truth = separated_sines();
        let data = draw(&truth, 3000, 21);
        let fit = fit_mixture(Family::Sine, true, 2, &data, &MixtureOptions::default()).unwrap();
        let est = &fit.model;
        // align labels by the closer location
        let gap = |a: &SkewModel, b: &SkewModel| a.mu().distance(b.mu());
        let swap = gap(&est.components()[0], &truth.components()[0]) > gap(&est.components()[0], &truth.components()[1]);
        let order = if swap { [1, 0] } else { [0, 1] };
        let grid = QuadratureGrid::new(2, 128).unwrap();
        for (j, &e) in order.iter().enumerate() {
            let t = &truth.components()[j];
            let m = &est.components()[e];
            assert!((est.weights()[e] - truth.weights()[j]).abs() < 0.05);
            let info = fisher_information(m, &grid).unwrap();
            let cov = info.try_inverse().unwrap() / (3000.0 * est.weights()[e]);
            for (i, (a, b)) in params(m).iter().zip(params(t)).enumerate() {
                let se = cov[(i, i)].sqrt();
                assert!((a - b).abs() < 3.0 * se, "component {j} parameter {i}: {a} vs {b} (se {se})");
            }
        }
    }

    /// Direct optimization of the joint likelihood from the EM solution
    /// finds essentially nothing more.
    #[test]
    fn agrees_with_joint_optimization() {
        let data = draw(&separated_sines(), 800, 4);
        let opts = MixtureOptions { n_init: 2, tol: 1e-12, max_iters: 2000, ..Default::default() };
        let fit = fit_mixture(Family::Sine, true, 2, &data, &opts).unwrap();
        let layout = Layout::new(Family::Sine, 2, true);
        let m = layout.n_free();
        let mut u0: Vec<f64> = fit.model.components().iter().flat_map(|c| layout.from_model(c)).collect();
        let p = fit.model.weights()[0];
        u0.push((p / (1.0 - p)).ln());
        let n = data.len() as f64;
        let objective = |u: &[f64]| -> Option<(f64, Vec<f64>)> {
            let p = 1.0 / (1.0 + (-u[2 * m]).exp());
            let comps = vec![layout.to_model(&u[..m]).ok()?, layout.to_model(&u[m..2 * m]).ok()?];
            let mix = MixtureModel::new(comps, vec![p, 1.0 - p]).ok()?;
            let (ll, resp) = e_step(&mix, &data).ok()?;
            let mut g = vec![];
            for (j, c) in mix.components().iter().enumerate() {
                let (_, gn) = weighted_score(&c.density().ok()?, &data, Some(&resp[j])).ok()?;
                g.extend(layout.chain(&u[j * m..(j + 1) * m], &gn));
            }
            g.push(resp[0].iter().map(|r| r - p).sum());
            Some((-ll / n, g.iter().map(|v| -v / n).collect()))
        };
        let res = bfgs(objective, &u0, 500, 1e-14);
        let joint = -res.f * n;
        assert!(joint - fit.score.log_lik < 1e-4, "joint {joint} vs EM {}", fit.score.log_lik);
    }

    #[test]
    fn isolated_point_is_degenerate() {
        let mut data: Vec<TorusPoint> = (0..30).map(|i| TorusPoint::new(vec![0.01 * i as f64, -0.02 * i as f64])).collect();
        data.push(TorusPoint::new(vec![3.0, 3.0]));
        let err = fit_mixture(Family::Sine, true, 2, &data, &MixtureOptions { n_init: 1, ..Default::default() });
        assert!(matches!(err, Err(Error::DegenerateComponent(_))), "{err:?}");
    }

    #[test]
    fn symmetry_test_nests() {
        let data = draw(&separated_sines(), 500, 9);
        let opts = MixtureOptions { n_init: 1, ..Default::default() };
        let (res, sym, skew) = mixture_symmetry_test(Family::Sine, 2, &data, &opts).unwrap();
        assert_eq!(res.df, 4);
        assert!(skew.score.log_lik >= sym.score.log_lik - 1e-6);
        assert!(res.statistic >= 0.0 && res.p_value <= 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let data = vec![TorusPoint::zeros(2); 10];
        assert!(fit_mixture(Family::Sine, true, 2, &data, &MixtureOptions::default()).is_err());
        assert!(fit_mixture(Family::Sine, true, 0, &data, &MixtureOptions::default()).is_err());
        let d1 = vec![TorusPoint::zeros(1); 100];
        assert!(fit_mixture(Family::WrappedCauchy, true, 2, &d1, &MixtureOptions::default()).is_err());
    }
}
