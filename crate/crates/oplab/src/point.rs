use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A parameter vector θ ∈ R^d.
///
/// Construction validates that every coordinate is finite, so a stored point
/// can always be trusted downstream; iteration drivers rely on this to report
/// non-finite evaluations at the step that produced them rather than later.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    coords: Vec<f64>,
}

impl ParamPoint {
    /// Builds a point, rejecting empty or non-finite input.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::validation("parameter point must have dimension >= 1"));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::non_finite(format!(
                "parameter coordinate {bad} is not finite"
            )));
        }
        Ok(ParamPoint { coords })
    }

    /// One-dimensional point.
    pub fn scalar(x: f64) -> Result<Self> {
        ParamPoint::new(vec![x])
    }

    /// The origin in R^d. `dim` must be at least 1.
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be >= 1");
        ParamPoint { coords: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The single coordinate of a 1-D point. Panics on higher dimensions;
    /// callers gate on `dim()` first.
    pub fn as_scalar(&self) -> f64 {
        assert_eq!(self.coords.len(), 1, "as_scalar requires a 1-D point");
        self.coords[0]
    }

    /// Euclidean norm ‖θ‖₂.
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Euclidean distance to `other`. Dimensions must agree.
    pub fn dist(&self, other: &ParamPoint) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl std::fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coords.len() == 1 {
            return write!(f, "{}", self.coords[0]);
        }
        write!(f, "[")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(ParamPoint::new(vec![]).is_err());
        assert!(ParamPoint::new(vec![f64::NAN]).is_err());
        assert!(ParamPoint::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(ParamPoint::new(vec![1.0, -2.0]).is_ok());
    }

    #[test]
    fn norms_and_distances() {
        let a = ParamPoint::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(a.norm(), 5.0);
        let b = ParamPoint::zero(2);
        assert_eq!(a.dist(&b), 5.0);
        assert_eq!(b.norm(), 0.0);
    }

    #[test]
    fn scalar_accessors() {
        let p = ParamPoint::scalar(-0.25).unwrap();
        assert_eq!(p.dim(), 1);
        assert_eq!(p.as_scalar(), -0.25);
        assert_eq!(p.to_string(), "-0.25");
        let q = ParamPoint::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(q.to_string(), "[1, 2]");
    }
}
