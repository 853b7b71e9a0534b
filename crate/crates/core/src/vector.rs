//! Fixed-capacity vectors for positions and velocities in up to three
//! dimensions.
//!
//! Every [`Vector`] stores three components. Components beyond the active
//! dimension of a swarm are kept at exactly zero, so norms and dot products
//! never need to know the dimension.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vector(pub [f64; MAX_DIM]);

impl Vector {
    pub const ZERO: Vector = Vector([0.0; MAX_DIM]);

    /// Builds a vector from a slice of at most [`MAX_DIM`] components,
    /// padding the rest with zeros.
    pub fn from_slice(c: &[f64]) -> Option<Vector> {
        if c.len() > MAX_DIM {
            return None;
        }
        let mut v = [0.0; MAX_DIM];
        v[..c.len()].copy_from_slice(c);
        Some(Vector(v))
    }

    pub fn splat(dim: usize, value: f64) -> Vector {
        let mut v = [0.0; MAX_DIM];
        v[..dim].iter_mut().for_each(|c| *c = value);
        Vector(v)
    }

    #[inline]
    pub fn dot(self, other: Vector) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist_sq(self, other: Vector) -> f64 {
        (self - other).norm_sq()
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn components(&self, dim: usize) -> &[f64] {
        &self.0[..dim]
    }

    /// Number of trailing components that are non-zero, i.e. the smallest
    /// dimension this vector fits in.
    pub fn used_dim(self) -> usize {
        self.0.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1)
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(self, o: Vector) -> Vector {
        Vector([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(self, o: Vector) -> Vector {
        Vector([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vector {
    type Output = Vector;
    #[inline]
    fn neg(self) -> Vector {
        Vector([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    #[inline]
    fn mul(self, v: Vector) -> Vector {
        Vector([self * v.0[0], self * v.0[1], self * v.0[2]])
    }
}

impl AddAssign for Vector {
    #[inline]
    fn add_assign(&mut self, o: Vector) {
        *self = *self + o;
    }
}

impl SubAssign for Vector {
    #[inline]
    fn sub_assign(&mut self, o: Vector) {
        *self = *self - o;
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl std::iter::Sum for Vector {
    fn sum<I: Iterator<Item = Vector>>(iter: I) -> Vector {
        iter.fold(Vector::ZERO, |a, b| a + b)
    }
}
