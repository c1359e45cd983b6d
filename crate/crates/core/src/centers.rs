//! Center vectors and observations.

use alloc::vec::Vec;
use core::slice::ChunksExact;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered list of `k >= 1` cluster centers in `R^d`, stored flat.
///
/// The loss is permutation invariant, so the order carries no meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CentersRepr", into = "CentersRepr")]
pub struct Centers {
    d: usize,
    coords: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CentersRepr {
    d: usize,
    points: Vec<Vec<f64>>,
}

impl TryFrom<CentersRepr> for Centers {
    type Error = Error;

    fn try_from(repr: CentersRepr) -> Result<Self> {
        let mut coords = Vec::with_capacity(repr.d * repr.points.len());
        for point in &repr.points {
            if point.len() != repr.d {
                return Err(Error::DimensionMismatch { expected: repr.d, got: point.len() });
            }
            coords.extend_from_slice(point);
        }
        Centers::new(repr.d, coords)
    }
}

impl From<Centers> for CentersRepr {
    fn from(c: Centers) -> Self {
        CentersRepr { d: c.d, points: c.points().map(<[f64]>::to_vec).collect() }
    }
}

impl Centers {
    /// Builds centers from flat coordinates `[c_1 | c_2 | ... | c_k]`.
    pub fn new(d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(crate::error::invalid("d", "dimension must be positive"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d, got: coords.len() % d.max(1) });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("centers"));
        }
        Ok(Centers { d, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let d = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(d * points.len());
        for p in points {
            let p = p.as_ref();
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Centers::new(d, coords)
    }

    /// Internal constructor for coordinates produced by samplers.
    pub(crate) fn from_raw(d: usize, coords: Vec<f64>) -> Self {
        debug_assert!(d > 0 && !coords.is_empty() && coords.len().is_multiple_of(d));
        Centers { d, coords }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of centers.
    pub fn k(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.coords[j * self.d..(j + 1) * self.d]
    }

    pub fn points(&self) -> ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.coords
    }

    /// Largest Euclidean norm among the centers.
    pub fn max_norm(&self) -> f64 {
        self.points().map(|p| crate::math::sqrt(crate::math::sq_norm(p))).fold(0.0, f64::max)
    }
}

/// A single observation `x_t` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(Vec<f64>);

impl Observation {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(crate::error::invalid("x", "observation must have at least one coordinate"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        Ok(Observation(x))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        crate::math::sqrt(crate::math::sq_norm(&self.0))
    }
}

impl AsRef<[f64]> for Observation {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(Centers::new(2, vec![]).is_err());
        assert!(Centers::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Centers::new(0, vec![1.0]).is_err());
        assert!(Centers::new(1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn points_view() {
        let c = Centers::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(c.k(), 2);
        assert_eq!(c.point(1), &[3.0, 4.0]);
        assert_eq!(c.points().count(), 2);
    }

    #[test]
    fn json_shape_and_round_trip() {
        let c = Centers::new(2, vec![0.1, -2.5e-300, 1.0 / 3.0, 7.0]).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"points\""));
        let back: Centers = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        for (a, b) in back.as_flat().iter().zip(c.as_flat()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn deserialize_validates() {
        assert!(serde_json::from_str::<Centers>(r#"{"d":2,"points":[[1.0]]}"#).is_err());
        assert!(serde_json::from_str::<Centers>(r#"{"d":2,"points":[]}"#).is_err());
    }

    #[test]
    fn observation_rejects_non_finite() {
        assert!(Observation::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(Observation::new(vec![]).is_err());
    }
}
