//! Bivariate wrapped Cauchy coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of the bivariate wrapped Cauchy denominator
/// `c0 - c1 cos y1 - c2 cos y2 - c3 cos y1 cos y2 - c4 sin y1 sin y2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WCCoefficients {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl WCCoefficients {
    pub fn as_array(&self) -> [f64; 5] {
        [self.c0, self.c1, self.c2, self.c3, self.c4]
    }

    /// Denominator at the centered point `(y1, y2)`.
    #[inline]
    pub fn denominator(&self, y1: f64, y2: f64) -> f64 {
        let (s1, c1) = y1.sin_cos();
        let (s2, c2) = y2.sin_cos();
        self.c0 - self.c1 * c1 - self.c2 * c2 - self.c3 * c1 * c2 - self.c4 * s1 * s2
    }
}

pub(crate) fn check_wc_params(k1: f64, k2: f64, r: f64) -> Result<()> {
    for (name, k) in [("kappa1", k1), ("kappa2", k2)] {
        if !(0.0..1.0).contains(&k) {
            return Err(Error::Domain(format!("wrapped Cauchy {name} must lie in [0, 1), got {k}")));
        }
    }
    if !(r.abs() < 1.0) {
        return Err(Error::Domain(format!("wrapped Cauchy r must lie in (-1, 1), got {r}")));
    }
    Ok(())
}

/// The five denominator coefficients. `|r|` enters `c0..c3`, signed `r` enters `c4`.
pub fn wc_coefficients(k1: f64, k2: f64, r: f64) -> Result<WCCoefficients> {
    check_wc_params(k1, k2, r)?;
    Ok(wc_coefficients_unchecked(k1, k2, r))
}

pub(crate) fn wc_coefficients_unchecked(k1: f64, k2: f64, r: f64) -> WCCoefficients {
    let ar = r.abs();
    let (p1, p2, pr) = (1.0 + k1 * k1, 1.0 + k2 * k2, 1.0 + r * r);
    WCCoefficients {
        c0: pr * p1 * p2 - 8.0 * ar * k1 * k2,
        c1: 2.0 * pr * k1 * p2 - 4.0 * ar * p1 * k2,
        c2: 2.0 * pr * p1 * k2 - 4.0 * ar * k1 * p2,
        c3: -4.0 * pr * k1 * k2 + 2.0 * ar * p1 * p2,
        c4: 2.0 * r * (1.0 - k1 * k1) * (1.0 - k2 * k2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn collapses_at_zero() {
        let c = wc_coefficients(0.0, 0.0, 0.0).unwrap();
        assert_eq!(c.as_array(), [1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn half_concentration_independent() {
        // (1 + 0.25)^2, 2 * 0.5 * 1.25, -4 * 0.25
        let c = wc_coefficients(0.5, 0.5, 0.0).unwrap();
        assert_relative_eq!(c.c0, 1.5625);
        assert_relative_eq!(c.c1, 1.25);
        assert_relative_eq!(c.c2, 1.25);
        assert_relative_eq!(c.c3, -1.0);
        assert_eq!(c.c4, 0.0);
    }

    #[test]
    fn sign_of_r_only_moves_c4() {
        let a = wc_coefficients(0.3, 0.7, 0.4).unwrap();
        let b = wc_coefficients(0.3, 0.7, -0.4).unwrap();
        assert_eq!(a.c0, b.c0);
        assert_eq!(a.c1, b.c1);
        assert_eq!(a.c2, b.c2);
        assert_eq!(a.c3, b.c3);
        assert_eq!(a.c4, -b.c4);
    }

    #[test]
    fn denominator_positive_over_parameter_grid() {
        let vals = [0.0, 0.1, 0.5, 0.9, 0.99];
        for &k1 in &vals {
            for &k2 in &vals {
                for &r in &[-0.99, -0.8, -0.3, 0.0, 0.3, 0.8, 0.99] {
                    let c = wc_coefficients(k1, k2, r).unwrap();
                    for i in 0..64 {
                        for j in 0..64 {
                            let y1 = -std::f64::consts::PI + i as f64 * 0.098_174_770_424_681;
                            let y2 = -std::f64::consts::PI + j as f64 * 0.098_174_770_424_681;
                            assert!(c.denominator(y1, y2) > 0.0, "{k1} {k2} {r}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn out_of_range() {
        assert!(wc_coefficients(1.0, 0.1, 0.0).is_err());
        assert!(wc_coefficients(0.1, -0.1, 0.0).is_err());
        assert!(wc_coefficients(0.1, 0.1, 1.0).is_err());
    }
}
