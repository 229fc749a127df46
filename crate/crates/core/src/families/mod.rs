//! Pointwise-symmetric base densities `f(y; theta)` centered at the origin.
//!
//! * `Uniform` on `T^d`.
//! * `Sine`: `exp(sum k_s cos y_s + dependence)` with dependence
//!   `r sin y1 sin y2` for `d = 2` and `s' R s` for `d >= 3`.
//! * `Cosine`: as `Sine` with `r cos(y1 - y2)` for `d = 2` and
//!   `s' R s + c' R c` for `d >= 3`.
//! * `WrappedCauchy`: the bivariate wrapped Cauchy (`d = 2` only).
//!
//! For `d = 1` both `Sine` and `Cosine` reduce to the von Mises density.

mod constants;
mod sampling;
mod wrapped_cauchy;

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bessel_i_ratio, log_bessel_i0, NeumaierSum, QuadratureGrid};

pub use constants::{cosine_log_norm_const, sine_log_norm_const};
pub(crate) use constants::{log_integral_exp, memoized};
pub use sampling::{sample_von_mises, sample_wrapped_cauchy, BaseSampler};
pub use wrapped_cauchy::{wc_coefficients, WCCoefficients};

/// Largest dimension with a normalized Sine/Cosine density.
pub const MAX_EXPONENTIAL_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Uniform,
    Sine,
    Cosine,
    #[serde(rename = "wc")]
    WrappedCauchy,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Uniform, Family::Sine, Family::Cosine, Family::WrappedCauchy];

    /// Short model code: `U`, `S`, `C`, `WC`, prefixed with `S` when skewed.
    pub fn code(&self, skewed: bool) -> String {
        let base = match self {
            Family::Uniform => "U",
            Family::Sine => "S",
            Family::Cosine => "C",
            Family::WrappedCauchy => "WC",
        };
        if skewed {
            format!("S{base}")
        } else {
            base.to_string()
        }
    }

    /// Parse a model code such as `SWC` into `(family, skewed)`.
    pub fn from_code(code: &str) -> Option<(Family, bool)> {
        match code.to_ascii_uppercase().as_str() {
            "U" => Some((Family::Uniform, false)),
            "SU" => Some((Family::Uniform, true)),
            "S" => Some((Family::Sine, false)),
            "SS" => Some((Family::Sine, true)),
            "C" => Some((Family::Cosine, false)),
            "SC" => Some((Family::Cosine, true)),
            "WC" => Some((Family::WrappedCauchy, false)),
            "SWC" => Some((Family::WrappedCauchy, true)),
            _ => None,
        }
    }

    /// Number of base parameters `theta` in dimension `d`.
    pub fn theta_len(&self, d: usize) -> usize {
        match self {
            Family::Uniform => 0,
            Family::Sine | Family::Cosine => d * (d + 1) / 2,
            Family::WrappedCauchy => 3,
        }
    }

    /// Names of the base parameters, in `theta` order.
    pub fn theta_names(&self, d: usize) -> Vec<String> {
        match self {
            Family::Uniform => vec![],
            Family::WrappedCauchy => vec!["kappa1".into(), "kappa2".into(), "r".into()],
            Family::Sine | Family::Cosine => {
                let mut names: Vec<String> = (1..=d).map(|s| format!("kappa{s}")).collect();
                if d == 2 {
                    names.push("r".into());
                } else {
                    for (i, j) in pairs(d) {
                        names.push(format!("R{}{}", i + 1, j + 1));
                    }
                }
                names
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Uniform => "uniform",
            Family::Sine => "sine",
            Family::Cosine => "cosine",
            Family::WrappedCauchy => "wc",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "u" => Ok(Family::Uniform),
            "sine" | "s" => Ok(Family::Sine),
            "cosine" | "c" => Ok(Family::Cosine),
            "wc" | "wrapped-cauchy" | "wrapped_cauchy" | "wrappedcauchy" => Ok(Family::WrappedCauchy),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        }
    }
}

/// Index pairs `(i, j)` with `i < j`, row-major.
pub(crate) fn pairs(d: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for i in 0..d {
        for j in i + 1..d {
            v.push((i, j));
        }
    }
    v
}

/// Validated parameters of a base family.
///
/// `dep` holds the dependence parameters: `[r]` for bivariate models and the
/// strict upper triangle of `R` (row-major) for `d >= 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct FamilyParams {
    family: Family,
    dim: usize,
    kappa: Vec<f64>,
    dep: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    family: Family,
    dim: usize,
    #[serde(default)]
    kappa: Vec<f64>,
    #[serde(default)]
    dep: Vec<f64>,
}

impl TryFrom<RawParams> for FamilyParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        FamilyParams::new(r.family, r.dim, r.kappa, r.dep)
    }
}

impl From<FamilyParams> for RawParams {
    fn from(p: FamilyParams) -> Self {
        RawParams { family: p.family, dim: p.dim, kappa: p.kappa, dep: p.dep }
    }
}

impl FamilyParams {
    pub fn new(family: Family, dim: usize, kappa: Vec<f64>, dep: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        match family {
            Family::Uniform => {
                if !kappa.is_empty() || !dep.is_empty() {
                    return Err(Error::Domain("uniform family takes no kappa or dependence".into()));
                }
            }
            Family::Sine | Family::Cosine => {
                if dim > MAX_EXPONENTIAL_DIM {
                    return Err(Error::UnsupportedDimension(dim));
                }
                if kappa.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: kappa.len() });
                }
                let n_dep = dim * (dim - 1) / 2;
                if dep.len() != n_dep {
                    return Err(Error::DimensionMismatch { expected: n_dep, got: dep.len() });
                }
                if let Some(k) = kappa.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
                    return Err(Error::Domain(format!("kappa must be finite and >= 0, got {k}")));
                }
                if let Some(r) = dep.iter().find(|r| !r.is_finite()) {
                    return Err(Error::Domain(format!("dependence must be finite, got {r}")));
                }
            }
            Family::WrappedCauchy => {
                if dim != 2 {
                    return Err(Error::UnsupportedDimension(dim));
                }
                if kappa.len() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: kappa.len() });
                }
                if dep.len() != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: dep.len() });
                }
                wrapped_cauchy::check_wc_params(kappa[0], kappa[1], dep[0])?;
            }
        }
        Ok(FamilyParams { family, dim, kappa, dep })
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        Self::new(Family::Uniform, dim, vec![], vec![])
    }

    pub fn sine(k1: f64, k2: f64, r: f64) -> Result<Self> {
        Self::new(Family::Sine, 2, vec![k1, k2], vec![r])
    }

    pub fn cosine(k1: f64, k2: f64, r: f64) -> Result<Self> {
        Self::new(Family::Cosine, 2, vec![k1, k2], vec![r])
    }

    pub fn wrapped_cauchy(k1: f64, k2: f64, r: f64) -> Result<Self> {
        Self::new(Family::WrappedCauchy, 2, vec![k1, k2], vec![r])
    }

    /// The univariate von Mises density, as a one-dimensional Sine model.
    pub fn von_mises(kappa: f64) -> Result<Self> {
        Self::new(Family::Sine, 1, vec![kappa], vec![])
    }

    /// Rebuild from a flat `theta` vector (`kappa` then `dep`).
    pub fn from_theta(family: Family, dim: usize, theta: &[f64]) -> Result<Self> {
        let n = family.theta_len(dim);
        if theta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
        }
        match family {
            Family::Uniform => Self::uniform(dim),
            Family::WrappedCauchy => Self::new(family, dim, theta[..2].to_vec(), theta[2..].to_vec()),
            Family::Sine | Family::Cosine => {
                Self::new(family, dim, theta[..dim].to_vec(), theta[dim..].to_vec())
            }
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn dep(&self) -> &[f64] {
        &self.dep
    }

    /// Flat parameter vector `(kappa, dep)`.
    pub fn theta(&self) -> Vec<f64> {
        let mut t = self.kappa.clone();
        t.extend_from_slice(&self.dep);
        t
    }

    /// Symmetric dependence matrix with zero diagonal. For `d = 2` the
    /// off-diagonal entry is `r`.
    pub fn dep_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.dim;
        let mut m = vec![vec![0.0; d]; d];
        for ((i, j), v) in pairs(d).into_iter().zip(&self.dep) {
            m[i][j] = *v;
            m[j][i] = *v;
        }
        m
    }

    /// `ln` of the normalizing constant.
    pub fn log_norm_const(&self) -> Result<f64> {
        let d = self.dim;
        match self.family {
            Family::Uniform => Ok(d as f64 * TAU.ln()),
            Family::WrappedCauchy => {
                let (k1, k2, r) = (self.kappa[0], self.kappa[1], self.dep[0]);
                Ok((4.0 * PI * PI).ln() - ((1.0 - r * r) * (1.0 - k1 * k1) * (1.0 - k2 * k2)).ln())
            }
            Family::Sine | Family::Cosine if d == 1 => Ok(TAU.ln() + log_bessel_i0(self.kappa[0])),
            Family::Sine if d == 2 => sine_log_norm_const(self.kappa[0], self.kappa[1], self.dep[0]),
            Family::Cosine if d == 2 => cosine_log_norm_const(self.kappa[0], self.kappa[1], self.dep[0]),
            _ => {
                let tag = if self.family == Family::Sine { 1 } else { 2 };
                let ex = Exponent::new(self);
                Ok(memoized(tag, &self.theta(), || {
                    vec![log_integral_exp(|y| ex.value(y), &QuadratureGrid::default_for(d))]
                })[0])
            }
        }
    }

    pub(crate) fn wc(&self) -> Option<WCCoefficients> {
        (self.family == Family::WrappedCauchy)
            .then(|| wrapped_cauchy::wc_coefficients_unchecked(self.kappa[0], self.kappa[1], self.dep[0]))
    }
}

/// Unnormalized log density of the exponential families, written uniformly as
/// `sum k_s cos y_s + sum_{i<j} w_ij t(y_i, y_j)` where `t` is `sin y_i sin y_j`
/// (Sine) or `cos(y_i - y_j)` (Cosine), `w = r` for `d = 2` and `w = 2 R_ij` above.
#[derive(Debug, Clone)]
pub(crate) struct Exponent {
    cosine: bool,
    kappa: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    weights: Vec<f64>,
}

impl Exponent {
    pub(crate) fn new(p: &FamilyParams) -> Self {
        let scale = if p.dim == 2 { 1.0 } else { 2.0 };
        Exponent {
            cosine: p.family == Family::Cosine,
            kappa: p.kappa.clone(),
            pairs: pairs(p.dim),
            weights: p.dep.iter().map(|v| scale * v).collect(),
        }
    }

    pub(crate) fn value(&self, y: &[f64]) -> f64 {
        let mut e: f64 = self.kappa.iter().zip(y).map(|(k, v)| k * v.cos()).sum();
        for (&(i, j), w) in self.pairs.iter().zip(&self.weights) {
            e += w * self.pair_term(y[i], y[j]);
        }
        e
    }

    #[inline]
    fn pair_term(&self, a: f64, b: f64) -> f64 {
        if self.cosine {
            (a - b).cos()
        } else {
            a.sin() * b.sin()
        }
    }

    /// Sufficient statistics: derivative of the exponent with respect to each theta entry.
    pub(crate) fn stats(&self, y: &[f64], out: &mut [f64]) {
        let d = self.kappa.len();
        for s in 0..d {
            out[s] = y[s].cos();
        }
        let scale = if d == 2 { 1.0 } else { 2.0 };
        for (m, &(i, j)) in self.pairs.iter().enumerate() {
            out[d + m] = scale * self.pair_term(y[i], y[j]);
        }
    }

    pub(crate) fn grad(&self, y: &[f64], out: &mut [f64]) {
        for (s, o) in out.iter_mut().enumerate() {
            *o = -self.kappa[s] * y[s].sin();
        }
        for (&(i, j), w) in self.pairs.iter().zip(&self.weights) {
            if self.cosine {
                let g = -w * (y[i] - y[j]).sin();
                out[i] += g;
                out[j] -= g;
            } else {
                out[i] += w * y[i].cos() * y[j].sin();
                out[j] += w * y[i].sin() * y[j].cos();
            }
        }
    }
}

/// Evaluator for a base density with its constant precomputed.
#[derive(Debug)]
pub struct BaseDensity {
    params: FamilyParams,
    log_c: f64,
    kind: Kind,
    dlog_c: OnceLock<Result<Vec<f64>>>,
}

#[derive(Debug)]
enum Kind {
    Uniform,
    Exp(Exponent),
    Wc(WCCoefficients),
}

impl Clone for BaseDensity {
    fn clone(&self) -> Self {
        let kind = match &self.kind {
            Kind::Uniform => Kind::Uniform,
            Kind::Exp(e) => Kind::Exp(e.clone()),
            Kind::Wc(c) => Kind::Wc(*c),
        };
        let dlog_c = OnceLock::new();
        if let Some(v) = self.dlog_c.get() {
            let _ = dlog_c.set(v.clone());
        }
        BaseDensity { params: self.params.clone(), log_c: self.log_c, kind, dlog_c }
    }
}

impl BaseDensity {
    pub fn new(params: &FamilyParams) -> Result<Self> {
        let kind = match params.family {
            Family::Uniform => Kind::Uniform,
            Family::Sine | Family::Cosine => Kind::Exp(Exponent::new(params)),
            Family::WrappedCauchy => Kind::Wc(params.wc().expect("wc params")),
        };
        Ok(BaseDensity { params: params.clone(), log_c: params.log_norm_const()?, kind, dlog_c: OnceLock::new() })
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    pub fn log_norm_const(&self) -> f64 {
        self.log_c
    }

    /// `ln f(y)` at a centered point.
    pub fn log_density(&self, y: &[f64]) -> f64 {
        match &self.kind {
            Kind::Uniform => -self.log_c,
            Kind::Exp(e) => e.value(y) - self.log_c,
            Kind::Wc(c) => -self.log_c - c.denominator(y[0], y[1]).ln(),
        }
    }

    /// Gradient of `ln f` with respect to the point.
    pub fn grad_y(&self, y: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::Uniform => out.iter_mut().for_each(|o| *o = 0.0),
            Kind::Exp(e) => e.grad(y, out),
            Kind::Wc(c) => {
                let (s1, c1) = y[0].sin_cos();
                let (s2, c2) = y[1].sin_cos();
                let den = c.denominator(y[0], y[1]);
                out[0] = -(c.c1 * s1 + c.c3 * s1 * c2 - c.c4 * c1 * s2) / den;
                out[1] = -(c.c2 * s2 + c.c3 * c1 * s2 - c.c4 * s1 * c2) / den;
            }
        }
    }

    /// Gradient of `ln C` with respect to `theta`, computed once.
    pub fn dlog_norm_const(&self) -> Result<&[f64]> {
        self.dlog_c
            .get_or_init(|| dlog_norm_const(&self.params))
            .as_ref()
            .map(|v| v.as_slice())
            .map_err(|e| e.clone())
    }

    /// Gradient of `ln f(y)` with respect to `theta`.
    pub fn theta_score(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.kind {
            Kind::Uniform => {}
            Kind::Exp(e) => {
                let dc = self.dlog_norm_const()?;
                e.stats(y, out);
                out.iter_mut().zip(dc).for_each(|(o, d)| *o -= d);
            }
            Kind::Wc(c) => {
                let (k1, k2, r) = (self.params.kappa[0], self.params.kappa[1], self.params.dep[0]);
                let (s1, c1) = y[0].sin_cos();
                let (s2, c2) = y[1].sin_cos();
                let phi = [1.0, -c1, -c2, -c1 * c2, -s1 * s2];
                let den = c.denominator(y[0], y[1]);
                let dc = wc_coefficient_jacobian(k1, k2, r);
                let dn = [-2.0 * k1 / (1.0 - k1 * k1), -2.0 * k2 / (1.0 - k2 * k2), -2.0 * r / (1.0 - r * r)];
                for t in 0..3 {
                    let dd: f64 = (0..5).map(|m| dc[m][t] * phi[m]).sum();
                    out[t] = dn[t] - dd / den;
                }
            }
        }
        Ok(())
    }
}

/// `d c_m / d (k1, k2, r)`; at `r = 0` the `|r|` terms use the symmetric derivative 0.
fn wc_coefficient_jacobian(a: f64, b: f64, r: f64) -> [[f64; 3]; 5] {
    let s = r.abs();
    let g = if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    };
    let (pr, p1, p2) = (1.0 + r * r, 1.0 + a * a, 1.0 + b * b);
    [
        [2.0 * pr * a * p2 - 8.0 * s * b, 2.0 * pr * p1 * b - 8.0 * s * a, 2.0 * r * p1 * p2 - 8.0 * g * a * b],
        [2.0 * pr * p2 - 8.0 * s * a * b, 4.0 * pr * a * b - 4.0 * s * p1, 4.0 * r * a * p2 - 4.0 * g * p1 * b],
        [4.0 * pr * a * b - 4.0 * s * p2, 2.0 * pr * p1 - 8.0 * s * a * b, 4.0 * r * p1 * b - 4.0 * g * a * p2],
        [-4.0 * pr * b + 4.0 * s * a * p2, -4.0 * pr * a + 4.0 * s * p1 * b, -8.0 * r * a * b + 2.0 * g * p1 * p2],
        [-4.0 * r * a * (1.0 - b * b), -4.0 * r * b * (1.0 - a * a), 2.0 * (1.0 - a * a) * (1.0 - b * b)],
    ]
}

/// Derivative of `ln C` for the exponential families. Closed form for the von
/// Mises, finite differences of the series for `d = 2`, and the identity
/// `d ln C / d theta = E[stats]` by quadrature for `d >= 3`.
fn dlog_norm_const(p: &FamilyParams) -> Result<Vec<f64>> {
    let d = p.dim;
    match p.family {
        Family::Uniform => Ok(vec![]),
        Family::WrappedCauchy => {
            let (k1, k2, r) = (p.kappa[0], p.kappa[1], p.dep[0]);
            Ok(vec![2.0 * k1 / (1.0 - k1 * k1), 2.0 * k2 / (1.0 - k2 * k2), 2.0 * r / (1.0 - r * r)])
        }
        _ if d == 1 => Ok(vec![bessel_i_ratio(p.kappa[0])]),
        _ if d == 2 => {
            let f = |t: &[f64]| -> Result<f64> {
                if p.family == Family::Sine {
                    sine_log_norm_const(t[0], t[1], t[2])
                } else {
                    cosine_log_norm_const(t[0], t[1], t[2])
                }
            };
            let theta = p.theta();
            let mut out = vec![0.0; 3];
            for (i, o) in out.iter_mut().enumerate() {
                let h = 1e-5 * theta[i].abs().max(1.0);
                let at = |delta: f64| -> Result<f64> {
                    let mut t = theta.clone();
                    t[i] += delta;
                    f(&t)
                };
                *o = if i < 2 && theta[i] < 2.0 * h {
                    // one-sided, second order, stays inside kappa >= 0
                    (-3.0 * at(0.0)? + 4.0 * at(h)? - at(2.0 * h)?) / (2.0 * h)
                } else {
                    (at(h)? - at(-h)?) / (2.0 * h)
                };
            }
            Ok(out)
        }
        _ => {
            let tag = if p.family == Family::Sine { 3 } else { 4 };
            let ex = Exponent::new(p);
            let log_c = p.log_norm_const()?;
            let n = p.family.theta_len(d);
            let grid = QuadratureGrid::default_for(d);
            Ok(memoized(tag, &p.theta(), || {
                let mut acc = vec![NeumaierSum::new(); n];
                let mut st = vec![0.0; n];
                grid.for_each_node(|y| {
                    let w = (ex.value(y) - log_c).exp();
                    ex.stats(y, &mut st);
                    acc.iter_mut().zip(&st).for_each(|(a, s)| a.add(w * s));
                });
                acc.iter().map(|a| a.value() * grid.weight()).collect()
            }))
        }
    }
}

/// `ln f(x; theta)` for a point already centered at the location.
pub fn base_log_density(params: &FamilyParams, x: &[f64]) -> Result<f64> {
    if x.len() != params.dim {
        return Err(Error::DimensionMismatch { expected: params.dim, got: x.len() });
    }
    Ok(BaseDensity::new(params)?.log_density(x))
}

/// Outcome of a unimodality criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Unimodal,
    Multimodal,
    Unknown,
}

/// Unimodality of a bivariate base density from its parameters alone.
///
/// Sine: unimodal iff `k1 k2 > r^2`. Cosine: unimodal iff
/// `-r < k1 k2 / (k1 + k2)`. Wrapped Cauchy: unimodal for `k1, k2 > 0`.
/// Boundary cases, vanishing concentrations and the flat uniform give `Unknown`.
pub fn base_is_unimodal(params: &FamilyParams) -> Result<Modality> {
    if params.dim != 2 {
        return Err(Error::UnsupportedDimension(params.dim));
    }
    let cmp = |lhs: f64, rhs: f64| {
        if lhs > rhs {
            Modality::Unimodal
        } else if lhs < rhs {
            Modality::Multimodal
        } else {
            Modality::Unknown
        }
    };
    Ok(match params.family {
        Family::Uniform => Modality::Unknown,
        Family::Sine => {
            let (k1, k2, r) = (params.kappa[0], params.kappa[1], params.dep[0]);
            if k1 * k2 == 0.0 {
                Modality::Unknown
            } else {
                cmp(k1 * k2, r * r)
            }
        }
        Family::Cosine => {
            let (k1, k2, r) = (params.kappa[0], params.kappa[1], params.dep[0]);
            if k1 + k2 == 0.0 {
                Modality::Unknown
            } else {
                cmp(k1 * k2 / (k1 + k2), -r)
            }
        }
        Family::WrappedCauchy => {
            if params.kappa[0] > 0.0 && params.kappa[1] > 0.0 {
                Modality::Unimodal
            } else {
                Modality::Unknown
            }
        }
    })
}
