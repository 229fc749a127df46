//! Points on the d-torus, represented in `[-pi, pi)^d`.

use std::f64::consts::{PI, TAU};
use std::ops::Deref;

use serde::{Deserialize, Serialize};

/// Wrap an angle into `[-pi, pi)`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let w = x - TAU * ((x + PI) / TAU).floor();
    // floor() can leave w == pi after rounding
    if w >= PI {
        w - TAU
    } else if w < -PI {
        w + TAU
    } else {
        w
    }
}

/// Shortest signed angular difference `a - b`, wrapped.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// A point on the torus. Coordinates are always stored wrapped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct TorusPoint(Vec<f64>);

impl TorusPoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        let mut v = coords.into();
        v.iter_mut().for_each(|x| *x = wrap_angle(*x));
        TorusPoint(v)
    }

    pub fn zeros(dim: usize) -> Self {
        TorusPoint(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Coordinate-wise wrapped difference `self - other`.
    pub fn diff(&self, other: &TorusPoint) -> Vec<f64> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| angle_diff(*a, *b))
            .collect()
    }

    /// Rotate every coordinate by `delta`.
    pub fn rotate(&self, delta: &[f64]) -> TorusPoint {
        TorusPoint::new(
            self.0
                .iter()
                .zip(delta)
                .map(|(a, d)| a + d)
                .collect::<Vec<_>>(),
        )
    }

    /// Geodesic distance on the flat torus.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        self.diff(other).iter().map(|d| d * d).sum::<f64>().sqrt()
    }
}

impl Deref for TorusPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for TorusPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for TorusPoint {
    fn from(v: Vec<f64>) -> Self {
        TorusPoint::new(v)
    }
}

impl From<TorusPoint> for Vec<f64> {
    fn from(p: TorusPoint) -> Self {
        p.0
    }
}
