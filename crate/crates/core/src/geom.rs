//! Vectors, directions, and halfspaces.

use crate::error::{invalid, Error, Result};
use crate::fmath;
use crate::rng::SplitRng;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Norm slack tolerated on a unit vector.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Point in R^d with finite coordinates, d >= 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyInput("vector"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vector coordinates"));
        }
        Ok(Vector(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.0
    }
}

/// Unit-norm direction: ||w|| = 1 within [`UNIT_NORM_TOL`] by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Normalizes `v`; rejects vectors whose norm is zero or too small to
    /// normalize stably.
    pub fn new(v: Vector) -> Result<Self> {
        let mut coords = v.into_coords();
        let n = norm(&coords);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        for c in coords.iter_mut() {
            *c /= n;
        }
        let renormed = norm(&coords);
        if !renormed.is_finite() || fmath::abs(renormed - 1.0) > UNIT_NORM_TOL {
            return Err(Error::ZeroVector);
        }
        Ok(UnitVector(coords))
    }

    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        UnitVector::new(Vector::new(coords)?)
    }

    /// Standard basis direction e_axis in R^d.
    pub fn basis(d: usize, axis: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::EmptyInput("vector"));
        }
        if axis >= d {
            return Err(invalid("axis", alloc::format!("axis {axis} out of range for dimension {d}")));
        }
        let mut coords = alloc::vec![0.0; d];
        coords[axis] = 1.0;
        Ok(UnitVector(coords))
    }

    /// Uniform random direction (normalized Gaussian).
    pub fn random(d: usize, rng: &mut SplitRng) -> Result<Self> {
        if d == 0 {
            return Err(Error::EmptyInput("vector"));
        }
        let mut coords = alloc::vec![0.0; d];
        loop {
            rng.fill_standard_normal(&mut coords);
            if let Ok(u) = UnitVector::from_coords(coords.clone()) {
                return Ok(u);
            }
        }
    }

    pub fn negated(&self) -> UnitVector {
        UnitVector(self.0.iter().map(|c| -c).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vector(self) -> Vector {
        Vector(self.0)
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;
    fn try_from(coords: Vec<f64>) -> Result<Self> {
        UnitVector::from_coords(coords)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Vec<f64> {
        u.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len(), "dot product dimension mismatch");
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

pub fn norm(a: &[f64]) -> f64 {
    fmath::sqrt(dot(a, a))
}

/// acc += s * x
pub(crate) fn scaled_add(acc: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(acc.len(), x.len());
    for i in 0..acc.len() {
        acc[i] += s * x[i];
    }
}

/// Component of `x` orthogonal to the direction `w`: x - <x,w> w.
pub fn project_orthogonal(x: &[f64], w: &UnitVector) -> Result<Vec<f64>> {
    if x.len() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            got: x.len(),
        });
    }
    let s = dot(x, w.as_slice());
    let mut out = x.to_vec();
    scaled_add(&mut out, -s, w.as_slice());
    Ok(out)
}

/// Angle between two directions, in [0, pi].
pub fn angle(u: &UnitVector, w: &UnitVector) -> Result<f64> {
    if u.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: w.dim(),
        });
    }
    let c = dot(u.as_slice(), w.as_slice()).clamp(-1.0, 1.0);
    Ok(fmath::acos(c))
}

/// Closed halfspace {x : <x,w> >= t}. Boundary points are members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    w: UnitVector,
    t: f64,
}

impl Halfspace {
    pub fn new(w: UnitVector, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::NonFinite("halfspace threshold"));
        }
        Ok(Halfspace { w, t })
    }

    /// Halfspace through the origin: {x : <x,w> >= 0}.
    pub fn homogeneous(w: UnitVector) -> Self {
        Halfspace { w, t: 0.0 }
    }

    pub fn normal(&self) -> &UnitVector {
        &self.w
    }

    pub fn threshold(&self) -> f64 {
        self.t
    }

    pub fn is_homogeneous(&self) -> bool {
        self.t == 0.0
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dot(x, self.w.as_slice()) - self.t >= 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_zero_and_nonfinite() {
        assert_eq!(UnitVector::from_coords(vec![0.0, 0.0]), Err(Error::ZeroVector));
        assert!(Vector::new(vec![f64::NAN]).is_err());
        assert!(Vector::new(vec![]).is_err());
    }

    #[test]
    fn normalization_is_exact_enough() {
        let u = UnitVector::from_coords(vec![3.0, 4.0]).unwrap();
        assert!((norm(u.as_slice()) - 1.0).abs() <= UNIT_NORM_TOL);
        assert!((u.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((u.as_slice()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let w = UnitVector::from_coords(vec![1.0, 0.0]).unwrap();
        assert_eq!(project_orthogonal(&[1.0, 1.0], &w).unwrap(), vec![0.0, 1.0]);
        assert_eq!(project_orthogonal(&[3.0, 0.0], &w).unwrap(), vec![0.0, 0.0]);
        let e3 = UnitVector::basis(3, 2).unwrap();
        assert_eq!(
            project_orthogonal(&[1.0, 2.0, 3.0], &e3).unwrap(),
            vec![1.0, 2.0, 0.0]
        );
    }

    #[test]
    fn projection_is_orthogonal_and_idempotent() {
        let mut rng = SplitRng::new(42);
        let mut x = vec![0.0; 6];
        for _ in 0..200 {
            let w = UnitVector::random(6, &mut rng).unwrap();
            rng.fill_standard_normal(&mut x);
            let p = project_orthogonal(&x, &w).unwrap();
            assert!(dot(&p, w.as_slice()).abs() < 1e-10, "projection not orthogonal to w");
            let pp = project_orthogonal(&p, &w).unwrap();
            for i in 0..p.len() {
                assert!((p[i] - pp[i]).abs() < 1e-10, "projection not idempotent");
            }
        }
    }

    #[test]
    fn angle_special_values() {
        let e1 = UnitVector::basis(2, 0).unwrap();
        let e2 = UnitVector::basis(2, 1).unwrap();
        assert_eq!(angle(&e1, &e1).unwrap(), 0.0);
        assert!((angle(&e1, &e2).unwrap() - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((angle(&e1, &e1.negated()).unwrap() - core::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn halfspace_boundary_is_inside() {
        let h = Halfspace::homogeneous(UnitVector::basis(2, 0).unwrap());
        assert!(h.contains(&[0.0, 5.0]));
        assert!(h.contains(&[1e-300, -1.0]));
        assert!(!h.contains(&[-1e-12, 0.0]));
        assert!(h.is_homogeneous());
        let shifted = Halfspace::new(UnitVector::basis(2, 0).unwrap(), 0.5).unwrap();
        assert!(!shifted.is_homogeneous());
        assert!(shifted.contains(&[0.5, 0.0]));
        assert!(!shifted.contains(&[0.49, 0.0]));
    }

    #[test]
    fn unit_vector_serde_roundtrip_revalidates() {
        let u = UnitVector::from_coords(vec![1.0, 2.0, -2.0]).unwrap();
        let json = serde_json::to_string(&u).unwrap();
        let back: UnitVector = serde_json::from_str(&json).unwrap();
        assert_eq!(u, back);
        let bad: core::result::Result<UnitVector, _> = serde_json::from_str("[0.0, 0.0]");
        assert!(bad.is_err(), "deserializing a zero vector must fail");
    }
}
