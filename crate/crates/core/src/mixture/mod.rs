//! Finite mixtures of sine-skewed densities, fitted by EM, with AIC/BIC
//! model selection.

mod em;
mod kmeans;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::Family;
use crate::inference::param_count;
use crate::numerics::log_sum_exp;
use crate::skew::{SkewDensity, SkewModel};
use crate::torus::TorusPoint;

pub use em::{fit_mixture, mixture_symmetry_test, MixtureFit, MixtureOptions, MIN_WEIGHT};

/// Weighted sum of skewed components sharing family and dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture")]
pub struct MixtureModel {
    components: Vec<SkewModel>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMixture {
    components: Vec<SkewModel>,
    weights: Vec<f64>,
}

impl TryFrom<RawMixture> for MixtureModel {
    type Error = Error;
    fn try_from(r: RawMixture) -> Result<Self> {
        MixtureModel::new(r.components, r.weights)
    }
}

impl MixtureModel {
    /// Weights must be non-negative and sum to one within `1e-9`; they are
    /// renormalized exactly.
    pub fn new(components: Vec<SkewModel>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput);
        }
        if weights.len() != components.len() {
            return Err(Error::DimensionMismatch { expected: components.len(), got: weights.len() });
        }
        let (family, d) = (components[0].family(), components[0].dim());
        for c in &components[1..] {
            if c.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: c.dim() });
            }
            if c.family() != family {
                return Err(Error::Domain("mixture components must share a family".into()));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("mixture weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("mixture weights sum to {total}, not 1")));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(MixtureModel { components, weights })
    }

    pub fn single(model: SkewModel) -> Self {
        MixtureModel { components: vec![model], weights: vec![1.0] }
    }

    pub fn components(&self) -> &[SkewModel] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn family(&self) -> Family {
        self.components[0].family()
    }

    pub(crate) fn densities(&self) -> Result<Vec<SkewDensity>> {
        self.components.iter().map(|c| c.density()).collect()
    }
}

/// Per-component `ln w_k + ln g_k(x)`.
pub(crate) fn component_log_terms(dens: &[SkewDensity], ln_w: &[f64], x: &[f64], out: &mut [f64]) {
    for k in 0..dens.len() {
        out[k] = ln_w[k] + dens[k].log_density(x);
    }
}

/// `ln sum_k w_k g_k(x)` by log-sum-exp.
pub fn mixture_log_density(mix: &MixtureModel, x: &TorusPoint) -> Result<f64> {
    if x.dim() != mix.dim() {
        return Err(Error::DimensionMismatch { expected: mix.dim(), got: x.dim() });
    }
    let dens = mix.densities()?;
    let ln_w: Vec<f64> = mix.weights.iter().map(|w| w.ln()).collect();
    let mut terms = vec![0.0; dens.len()];
    component_log_terms(&dens, &ln_w, x, &mut terms);
    Ok(log_sum_exp(&terms))
}

/// Free parameters of one component. A symmetric uniform component has no
/// identifiable parameters.
pub fn component_param_count(family: Family, d: usize, skewed: bool) -> usize {
    if family == Family::Uniform && !skewed {
        0
    } else {
        param_count(family, d, skewed)
    }
}

/// Free parameters of a `K`-component mixture: `K c + K - 1`.
pub fn mixture_param_count(family: Family, d: usize, skewed: bool, k: usize) -> usize {
    k * component_param_count(family, d, skewed) + k.saturating_sub(1)
}

/// Log-likelihood with AIC and BIC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub log_lik: f64,
    pub k_params: usize,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
}

impl ModelScore {
    pub fn new(log_lik: f64, k_params: usize, n: usize) -> Self {
        let k = k_params as f64;
        ModelScore {
            log_lik,
            k_params,
            aic: 2.0 * k - 2.0 * log_lik,
            bic: k * (n as f64).ln() - 2.0 * log_lik,
            n,
        }
    }
}

/// Candidates ordered by AIC and by BIC, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub by_aic: Vec<String>,
    pub by_bic: Vec<String>,
    pub best_aic: String,
    pub best_bic: String,
    /// The two criteria pick different winners.
    pub disagree: bool,
}

/// Rank candidates. Ties go to fewer parameters, then to the smaller name.
pub fn select_model(scores: &[(String, ModelScore)]) -> Result<Ranking> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    let rank = |key: fn(&ModelScore) -> f64| {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| {
            let (na, sa) = &scores[a];
            let (nb, sb) = &scores[b];
            key(sa)
                .total_cmp(&key(sb))
                .then(sa.k_params.cmp(&sb.k_params))
                .then(na.cmp(nb))
        });
        idx.into_iter().map(|i| scores[i].0.clone()).collect::<Vec<_>>()
    };
    let by_aic = rank(|s| s.aic);
    let by_bic = rank(|s| s.bic);
    let best_aic = by_aic[0].clone();
    let best_bic = by_bic[0].clone();
    Ok(Ranking { disagree: best_aic != best_bic, by_aic, by_bic, best_aic, best_bic })
}
