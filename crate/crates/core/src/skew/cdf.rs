use std::f64::consts::PI;

use super::SkewModel;
use crate::error::{Error, Result};
use crate::numerics::box_integrate;
use crate::torus::TorusPoint;

/// `P(X_1 <= x_1, ..., X_d <= x_d)` with the lower corner fixed at `-pi`,
/// by composite Gauss-Legendre quadrature of the density over the box.
pub fn skew_cdf(model: &SkewModel, x: &TorusPoint) -> Result<f64> {
    let d = model.dim();
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.dim() });
    }
    let (panels, order) = match d {
        1 => (128, 12),
        2 => (48, 10),
        3 => (16, 8),
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    let dens = model.density()?;
    let lower = vec![-PI; d];
    let v = box_integrate(|z| dens.log_density(z).exp(), &lower, x, panels, order)?;
    Ok(v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilyParams;

    #[test]
    fn empty_box_is_zero() {
        let m = SkewModel::new(TorusPoint::zeros(2), FamilyParams::sine(2.0, 1.0, 0.5).unwrap(), vec![0.2, 0.1]).unwrap();
        assert_eq!(skew_cdf(&m, &TorusPoint::new(vec![-PI, -PI])).unwrap(), 0.0);
    }

    #[test]
    fn full_box_is_one() {
        let almost = PI - 1e-12;
        for p in [
            FamilyParams::sine(2.0, 1.0, 0.5).unwrap(),
            FamilyParams::wrapped_cauchy(0.7, 0.2, -0.5).unwrap(),
            FamilyParams::cosine(50.0, 10.0, -5.0).unwrap(),
        ] {
            let m = SkewModel::new(TorusPoint::new(vec![3.0, -1.0]), p, vec![0.5, -0.25]).unwrap();
            let v = skew_cdf(&m, &TorusPoint::new(vec![almost, almost])).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn uniform_circle_half() {
        let m = SkewModel::symmetric(TorusPoint::zeros(1), FamilyParams::uniform(1).unwrap()).unwrap();
        let v = skew_cdf(&m, &TorusPoint::new(vec![0.0])).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn cardioid_closed_form() {
        // 1/(2 pi) (1 + l sin y): F(x) = (x + pi + l (-cos x - 1)) / (2 pi)
        let l = 0.6;
        let m = SkewModel::new(TorusPoint::zeros(1), FamilyParams::uniform(1).unwrap(), vec![l]).unwrap();
        for &x in &[-2.0, -0.5, 0.0, 1.0, 3.0] {
            let expect = (x + PI - l * (x.cos() + 1.0)) / (2.0 * PI);
            let v = skew_cdf(&m, &TorusPoint::new(vec![x])).unwrap();
            assert!((v - expect).abs() < 1e-12);
        }
    }
}
