//! Univariate marginals of bivariate skewed models.

use std::f64::consts::{PI, TAU};

use super::SkewModel;
use crate::error::{Error, Result};
use crate::families::Family;
use crate::numerics::log_sum_exp;
use crate::numerics::log_bessel_i_seq;
use crate::torus::wrap_angle;

/// Largest disagreement with the quadrature marginal tolerated before the
/// printed closed form is refused.
pub const CLOSED_FORM_TOL: f64 = 1e-6;

const MARGINAL_NODES: usize = 1024;
const GATE_POINTS: usize = 256;

fn check_bivariate(model: &SkewModel, coordinate: usize) -> Result<()> {
    if model.dim() != 2 {
        return Err(Error::UnsupportedDimension(model.dim()));
    }
    if coordinate > 1 {
        return Err(Error::Domain(format!("coordinate must be 0 or 1, got {coordinate}")));
    }
    Ok(())
}

/// `ln` of the marginal density of coordinate `coordinate` (0-based) at `x`,
/// integrating the other coordinate out on a 1024-node periodic rule.
pub fn marginal_log_density(model: &SkewModel, coordinate: usize, x: f64) -> Result<f64> {
    check_bivariate(model, coordinate)?;
    let dens = model.density()?;
    let h = TAU / MARGINAL_NODES as f64;
    let logs: Vec<f64> = (0..MARGINAL_NODES)
        .map(|j| {
            let t = -PI + h * j as f64;
            let z = if coordinate == 0 { [x, t] } else { [t, x] };
            dens.log_density(&z)
        })
        .collect();
    Ok(log_sum_exp(&logs) + h.ln())
}

/// The closed-form marginal as printed for the skewed Sine and Cosine models:
///
/// `exp(k1 cos(x - mu1)) / C * [2 pi I0(a) (1 + l1 sin x) + l2 I1(a)/I0(a) cos(mu2 + b)]`
///
/// with `a`, `b` defined by `k2 = a cos b`, `r sin(x - mu1) = a sin b` (Sine) or
/// `k2 + r cos(x - mu1) = a cos b`, `r sin(x - mu1) = a sin b` (Cosine). The
/// second coordinate swaps the roles of the indices. The bracket is not
/// guaranteed positive, in which case the log is NaN.
pub fn printed_marginal_log_density(model: &SkewModel, coordinate: usize, x: f64) -> Result<f64> {
    Ok(printed_marginal_density(model, coordinate, x)?.ln())
}

fn printed_marginal_density(model: &SkewModel, coordinate: usize, x: f64) -> Result<f64> {
    check_bivariate(model, coordinate)?;
    let fam = model.family();
    if !matches!(fam, Family::Sine | Family::Cosine) {
        return Err(Error::UnsupportedFamily(fam.to_string()));
    }
    let (i, j) = if coordinate == 0 { (0, 1) } else { (1, 0) };
    let kappa = model.theta().kappa();
    let r = model.theta().dep()[0];
    let mu = model.mu();
    let lambda = model.lambda();
    let y = wrap_angle(x - mu[i]);
    let (a_cos_b, a_sin_b) = if fam == Family::Sine {
        (kappa[j], r * y.sin())
    } else {
        (kappa[j] + r * y.cos(), r * y.sin())
    };
    let a = a_cos_b.hypot(a_sin_b);
    let b = a_sin_b.atan2(a_cos_b);
    let log_c = model.theta().log_norm_const()?;
    let li = log_bessel_i_seq(a, 1);
    let i0 = li[0].exp();
    let ratio = (li[1] - li[0]).exp();
    let bracket = TAU * i0 * (1.0 + lambda[i] * x.sin()) + lambda[j] * ratio * (mu[j] + b).cos();
    Ok((kappa[i] * y.cos() - log_c).exp() * bracket)
}

/// Largest absolute difference between the printed closed form and the
/// quadrature marginal over an equispaced set of points.
pub fn closed_form_discrepancy(model: &SkewModel, coordinate: usize) -> Result<f64> {
    let mut worst = 0.0_f64;
    for k in 0..GATE_POINTS {
        let x = -PI + TAU * (k as f64 + 0.5) / GATE_POINTS as f64;
        let printed = printed_marginal_density(model, coordinate, x)?;
        let quad = marginal_log_density(model, coordinate, x)?.exp();
        let diff = (printed - quad).abs();
        if !diff.is_finite() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(diff);
    }
    Ok(worst)
}

/// Marginal log density of a skewed Sine or Cosine model.
///
/// By default the marginal is computed by quadrature. With `closed_form` set,
/// the printed closed form is used only after it has been checked against the
/// quadrature marginal for this model; otherwise `ClosedFormRejected` is
/// returned carrying the observed discrepancy.
pub fn sine_marginal_log_density(model: &SkewModel, coordinate: usize, x: f64, closed_form: bool) -> Result<f64> {
    check_bivariate(model, coordinate)?;
    let fam = model.family();
    if !matches!(fam, Family::Sine | Family::Cosine) {
        return Err(Error::UnsupportedFamily(fam.to_string()));
    }
    if !closed_form {
        return marginal_log_density(model, coordinate, x);
    }
    let disc = closed_form_discrepancy(model, coordinate)?;
    if disc > CLOSED_FORM_TOL {
        log::warn!("closed-form marginal disagrees with quadrature by {disc:e}; refusing it");
        return Err(Error::ClosedFormRejected(disc));
    }
    printed_marginal_log_density(model, coordinate, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilyParams;
    use crate::numerics::bessel_i;
    use crate::torus::TorusPoint;

    fn model(k: (f64, f64), r: f64, l: (f64, f64), mu: (f64, f64)) -> SkewModel {
        SkewModel::new(TorusPoint::new(vec![mu.0, mu.1]), FamilyParams::sine(k.0, k.1, r).unwrap(), vec![l.0, l.1])
            .unwrap()
    }

    /// Marginal obtained by integrating y2 out by hand:
    /// `exp(k1 cos y1) / C [2 pi I0(a) (1 + l1 sin y1) + 2 pi l2 I1(a) sin b]`.
    fn derived_marginal(m: &SkewModel, x: f64) -> f64 {
        let k = m.theta().kappa();
        let r = m.theta().dep()[0];
        let y = wrap_angle(x - m.mu()[0]);
        let (ac, as_) = (k[1], r * y.sin());
        let a = ac.hypot(as_);
        let b = as_.atan2(ac);
        let l = m.lambda();
        let c = m.theta().log_norm_const().unwrap();
        (k[0] * y.cos() - c).exp()
            * TAU
            * (bessel_i(0, a).unwrap() * (1.0 + l[0] * y.sin()) + l[1] * bessel_i(1, a).unwrap() * b.sin())
    }

    #[test]
    fn quadrature_marginal_integrates_to_one() {
        let m = model((2.0, 3.0), 1.5, (0.2, 0.3), (0.4, -1.0));
        let n = 2048;
        let total: f64 = (0..n)
            .map(|k| marginal_log_density(&m, 0, -PI + TAU * k as f64 / n as f64).unwrap().exp())
            .sum::<f64>()
            * TAU
            / n as f64;
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn independent_case_is_skewed_von_mises() {
        let m = model((1.7, 0.8), 0.0, (0.6, 0.0), (0.9, 0.0));
        for k in 0..50 {
            let x = -PI + TAU * k as f64 / 50.0;
            let y = wrap_angle(x - 0.9);
            let direct = (1.7 * y.cos()).exp() * (1.0 + 0.6 * y.sin()) / (TAU * bessel_i(0, 1.7).unwrap());
            let q = marginal_log_density(&m, 0, x).unwrap().exp();
            assert!((q - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_joint_gives_symmetric_marginal() {
        let m = model((1.0, 2.0), -2.5, (0.0, 0.0), (0.3, 0.0));
        for k in 1..40 {
            let t = PI * k as f64 / 40.0;
            let a = marginal_log_density(&m, 0, 0.3 + t).unwrap().exp();
            let b = marginal_log_density(&m, 0, 0.3 - t).unwrap().exp();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn hand_derived_form_matches_quadrature() {
        let m = model((2.0, 3.0), 1.5, (0.2, 0.3), (0.4, -1.0));
        for k in 0..64 {
            let x = -PI + TAU * k as f64 / 64.0;
            let q = marginal_log_density(&m, 0, x).unwrap().exp();
            assert!((q - derived_marginal(&m, x)).abs() < 1e-10);
        }
    }

    #[test]
    fn printed_form_is_gated() {
        let m = model((2.0, 3.0), 1.5, (0.2, 0.3), (0.0, 0.0));
        let disc = closed_form_discrepancy(&m, 0).unwrap();
        assert!(disc > CLOSED_FORM_TOL);
        assert!(matches!(sine_marginal_log_density(&m, 0, 0.5, true), Err(Error::ClosedFormRejected(_))));
        assert!(sine_marginal_log_density(&m, 0, 0.5, false).is_ok());
    }

    #[test]
    fn printed_form_accepted_when_it_agrees() {
        // no skew in the integrated coordinate and mu = 0: the printed terms coincide
        let m = model((2.0, 3.0), 1.5, (0.4, 0.0), (0.0, 0.0));
        assert!(closed_form_discrepancy(&m, 0).unwrap() < CLOSED_FORM_TOL);
        let a = sine_marginal_log_density(&m, 0, 0.5, true).unwrap();
        let b = sine_marginal_log_density(&m, 0, 0.5, false).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn unsupported_inputs() {
        let wc = SkewModel::symmetric(TorusPoint::zeros(2), FamilyParams::wrapped_cauchy(0.1, 0.2, 0.0).unwrap()).unwrap();
        assert!(matches!(sine_marginal_log_density(&wc, 0, 0.0, false), Err(Error::UnsupportedFamily(_))));
        assert!(marginal_log_density(&wc, 0, 0.0).is_ok());
        let m = model((1.0, 1.0), 0.0, (0.0, 0.0), (0.0, 0.0));
        assert!(marginal_log_density(&m, 2, 0.0).is_err());
    }
}
