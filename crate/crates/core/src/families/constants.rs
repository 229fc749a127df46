//! Normalizing constants of the Sine and Cosine families.
//!
//! Bivariate constants use the binomial-Bessel (Sine) and triple-Bessel
//! (Cosine) series in log space. Higher dimensions, and the Sine series in
//! its ill-posed corner, fall back to tensor quadrature.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::numerics::{log_bessel_i0, log_bessel_i_seq, NeumaierSum, QuadratureGrid};

const MAX_TERMS: usize = 500;
const REL_TOL: f64 = 1e-14;
/// Above this value of `r^2 / (4 k1 k2)` the Sine series is replaced by quadrature.
const SINE_SERIES_RATIO_LIMIT: f64 = 1e3;

fn ln_4pi2() -> f64 {
    (4.0 * PI * PI).ln()
}

fn check(k1: f64, k2: f64, r: f64) -> Result<()> {
    if !(k1.is_finite() && k2.is_finite() && k1 >= 0.0 && k2 >= 0.0) {
        return Err(Error::Domain(format!("concentrations must be finite and >= 0, got ({k1}, {k2})")));
    }
    if !r.is_finite() {
        return Err(Error::Domain(format!("dependence parameter must be finite, got {r}")));
    }
    Ok(())
}

/// `ln C` for the bivariate Sine model with exponent
/// `k1 cos y1 + k2 cos y2 + r sin y1 sin y2`.
pub fn sine_log_norm_const(k1: f64, k2: f64, r: f64) -> Result<f64> {
    check(k1, k2, r)?;
    if r == 0.0 {
        return Ok(ln_4pi2() + log_bessel_i0(k1) + log_bessel_i0(k2));
    }
    let prod = k1 * k2;
    if prod == 0.0 || r * r / (4.0 * prod) > SINE_SERIES_RATIO_LIMIT {
        return Ok(quadrature_log_const(|y| {
            k1 * y[0].cos() + k2 * y[1].cos() + r * y[0].sin() * y[1].sin()
        }));
    }
    let log_ratio = (r * r / (4.0 * prod)).ln();
    let mut nmax = 64usize;
    loop {
        let b1 = log_bessel_i_seq(k1, nmax);
        let b2 = log_bessel_i_seq(k2, nmax);
        // ln binom(2i, i), accumulated
        let mut log_binom = 0.0_f64;
        let mut total = f64::NEG_INFINITY;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=nmax {
            if i > 0 {
                let fi = i as f64;
                log_binom += (2.0 * (2.0 * fi - 1.0) / fi).ln();
            }
            let t = log_binom + i as f64 * log_ratio + b1[i] + b2[i];
            total = log_add_exp(total, t);
            if i > 0 && t < prev && t - total < REL_TOL.ln() {
                return Ok(ln_4pi2() + total);
            }
            prev = t;
        }
        if nmax >= MAX_TERMS {
            return Err(Error::NonConvergence { terms: MAX_TERMS });
        }
        nmax = (nmax * 2).min(MAX_TERMS);
    }
}

/// `ln C` for the bivariate Cosine model with exponent
/// `k1 cos y1 + k2 cos y2 + r cos(y1 - y2)`.
pub fn cosine_log_norm_const(k1: f64, k2: f64, r: f64) -> Result<f64> {
    check(k1, k2, r)?;
    let t0 = log_bessel_i0(k1) + log_bessel_i0(k2) + log_bessel_i0(r.abs());
    if k1 == 0.0 || k2 == 0.0 || r == 0.0 {
        // I_i(0) = 0 for i >= 1
        return Ok(ln_4pi2() + t0);
    }
    let alternating = r < 0.0;
    let mut nmax = 64usize;
    loop {
        let b1 = log_bessel_i_seq(k1, nmax);
        let b2 = log_bessel_i_seq(k2, nmax);
        let b3 = log_bessel_i_seq(r.abs(), nmax);
        // terms decrease monotonically in magnitude; scale by the first
        let mut sum = NeumaierSum::new();
        sum.add(1.0);
        for i in 1..=nmax {
            let t = LN_2 + b1[i] + b2[i] + b3[i] - t0;
            let mag = t.exp();
            let signed = if alternating && i % 2 == 1 { -mag } else { mag };
            sum.add(signed);
            if mag < REL_TOL * sum.value().abs() {
                let s = sum.value();
                if s <= 0.0 {
                    // cancellation swallowed everything
                    return Ok(quadrature_log_const(|y| {
                        k1 * y[0].cos() + k2 * y[1].cos() + r * (y[0] - y[1]).cos()
                    }));
                }
                return Ok(ln_4pi2() + t0 + s.ln());
            }
        }
        if nmax >= MAX_TERMS {
            return Err(Error::NonConvergence { terms: MAX_TERMS });
        }
        nmax = (nmax * 2).min(MAX_TERMS);
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln` of the integral of `exp(exponent)` over the bivariate torus on the
/// default 256 x 256 grid, shifted by the maximum to stay in range.
fn quadrature_log_const<F: Fn(&[f64]) -> f64>(exponent: F) -> f64 {
    log_integral_exp(exponent, &QuadratureGrid::default_for(2))
}

pub(crate) fn log_integral_exp<F: Fn(&[f64]) -> f64>(exponent: F, grid: &QuadratureGrid) -> f64 {
    let mut max = f64::NEG_INFINITY;
    grid.for_each_node(|y| max = max.max(exponent(y)));
    let mut acc = NeumaierSum::new();
    grid.for_each_node(|y| acc.add((exponent(y) - max).exp()));
    max + (acc.value() * grid.weight()).ln()
}

type MemoKey = (u8, Vec<u64>);

fn memo() -> &'static Mutex<HashMap<MemoKey, Vec<f64>>> {
    static MEMO: OnceLock<Mutex<HashMap<MemoKey, Vec<f64>>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

const MEMO_CAPACITY: usize = 4096;

/// Read-through cache for quantities that need a full tensor quadrature.
/// The computation runs outside the lock; concurrent misses may both compute.
pub(crate) fn memoized<F: FnOnce() -> Vec<f64>>(tag: u8, params: &[f64], compute: F) -> Vec<f64> {
    let key = (tag, params.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    if let Some(v) = memo().lock().expect("memo poisoned").get(&key) {
        return v.clone();
    }
    let v = compute();
    let mut m = memo().lock().expect("memo poisoned");
    if m.len() >= MEMO_CAPACITY {
        m.clear();
    }
    m.insert(key, v.clone());
    v
}
