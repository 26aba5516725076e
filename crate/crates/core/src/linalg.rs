//! Small dense d-by-d tensor algebra (d = 2, 3).
//!
//! Deformation gradients, plastic strains, stresses, and cofactors are all
//! square matrices of runtime dimension 2 or 3, backed by a fixed 3x3 array on
//! the stack. [`TMat`] is generic over the scalar so the same formulas serve
//! `f64` evaluation and dual-number differentiation; [`Mat`] is the plain
//! `f64` alias used in public interfaces.

use crate::scalar::Scalar;
use std::ops::{Add, Mul, Neg, Sub};

/// Inversion rejects matrices with `|det|` below this unless a caller supplies
/// its own floor.
pub const SINGULARITY_FLOOR: f64 = 1e-14;

#[derive(Debug, thiserror::Error)]
#[error("matrix is numerically singular (det = {det:.3e})")]
pub struct SingularMatrix {
    pub det: f64,
}

/// Square matrix of runtime dimension `d` in {2, 3} over scalar `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TMat<T> {
    d: u8,
    a: [[T; 3]; 3],
}

/// `f64` matrix as used throughout the public API.
pub type Mat = TMat<f64>;

impl<T: Scalar> TMat<T> {
    pub fn zero(d: usize) -> Self {
        debug_assert!(d == 2 || d == 3);
        TMat {
            d: d as u8,
            a: [[T::zero(); 3]; 3],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zero(d);
        for i in 0..d {
            m.a[i][i] = T::one();
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d as usize
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.dim() && j < self.dim());
        self.a[i][j] = v;
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim();
        let mut m = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                m.a[i][j] = self.a[j][i];
            }
        }
        m
    }

    pub fn trace(&self) -> T {
        let mut s = self.a[0][0];
        for i in 1..self.dim() {
            s = s + self.a[i][i];
        }
        s
    }

    pub fn det(&self) -> T {
        let a = &self.a;
        match self.d {
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Cofactor matrix, satisfying `A * cof(A)^T = det(A) * I`.
    pub fn cof(&self) -> Self {
        let a = &self.a;
        let mut m = Self::zero(self.dim());
        match self.d {
            2 => {
                m.a[0][0] = a[1][1];
                m.a[0][1] = -a[1][0];
                m.a[1][0] = -a[0][1];
                m.a[1][1] = a[0][0];
            }
            _ => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                        m.a[i][j] = a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
                    }
                }
            }
        }
        m
    }

    /// Frobenius inner product `A : B`.
    pub fn frob(&self, other: &Self) -> T {
        debug_assert_eq!(self.d, other.d);
        let d = self.dim();
        let mut s = T::zero();
        for i in 0..d {
            for j in 0..d {
                s = s + self.a[i][j] * other.a[i][j];
            }
        }
        s
    }

    /// Frobenius norm `|A|`.
    pub fn norm(&self) -> T {
        self.frob(self).sqrt()
    }

    /// Inverse via cofactors; errors when `|det|` falls below `floor`.
    pub fn try_inverse(&self, floor: f64) -> Result<Self, SingularMatrix> {
        let det = self.det();
        if det.val().abs() < floor {
            return Err(SingularMatrix { det: det.val() });
        }
        let cof_t = self.cof().transpose();
        let d = self.dim();
        let mut m = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                m.a[i][j] = cof_t.a[i][j] / det;
            }
        }
        Ok(m)
    }

    pub fn scale(&self, s: T) -> Self {
        let d = self.dim();
        let mut m = *self;
        for i in 0..d {
            for j in 0..d {
                m.a[i][j] = m.a[i][j] * s;
            }
        }
        m
    }

    /// Map entries to another scalar type (used to lift constants into duals).
    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> TMat<U> {
        let d = self.dim();
        let mut m = TMat::<U>::zero(d);
        for i in 0..d {
            for j in 0..d {
                m.a[i][j] = f(self.a[i][j]);
            }
        }
        m
    }
}

impl Mat {
    /// Build a 2x2 matrix from rows. Entries must be finite.
    pub fn new2(rows: [[f64; 2]; 2]) -> Self {
        let mut m = Self::zero(2);
        for i in 0..2 {
            for j in 0..2 {
                assert!(rows[i][j].is_finite(), "non-finite matrix entry");
                m.a[i][j] = rows[i][j];
            }
        }
        m
    }

    /// Build a 3x3 matrix from rows. Entries must be finite.
    pub fn new3(rows: [[f64; 3]; 3]) -> Self {
        let mut m = Self::zero(3);
        for i in 0..3 {
            for j in 0..3 {
                assert!(rows[i][j].is_finite(), "non-finite matrix entry");
                m.a[i][j] = rows[i][j];
            }
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let d = entries.len();
        assert!(d == 2 || d == 3);
        let mut m = Self::zero(d);
        for (i, &v) in entries.iter().enumerate() {
            assert!(v.is_finite(), "non-finite matrix entry");
            m.a[i][i] = v;
        }
        m
    }

    /// Inverse with the default singularity floor.
    pub fn inverse(&self) -> Result<Self, SingularMatrix> {
        self.try_inverse(SINGULARITY_FLOOR)
    }

    /// Lift into duals or any other scalar as constants.
    pub fn lift<U: Scalar>(&self) -> TMat<U> {
        self.map(U::constant)
    }
}

impl<T: Scalar> Add for TMat<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.d, rhs.d);
        let d = self.dim();
        let mut m = self;
        for i in 0..d {
            for j in 0..d {
                m.a[i][j] = m.a[i][j] + rhs.a[i][j];
            }
        }
        m
    }
}

impl<T: Scalar> Sub for TMat<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        debug_assert_eq!(self.d, rhs.d);
        let d = self.dim();
        let mut m = self;
        for i in 0..d {
            for j in 0..d {
                m.a[i][j] = m.a[i][j] - rhs.a[i][j];
            }
        }
        m
    }
}

impl<T: Scalar> Neg for TMat<T> {
    type Output = Self;
    fn neg(self) -> Self {
        let d = self.dim();
        let mut m = self;
        for i in 0..d {
            for j in 0..d {
                m.a[i][j] = -m.a[i][j];
            }
        }
        m
    }
}

/// Matrix product.
impl<T: Scalar> Mul for TMat<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        debug_assert_eq!(self.d, rhs.d);
        let d = self.dim();
        let mut m = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                let mut s = self.a[i][0] * rhs.a[0][j];
                for k in 1..d {
                    s = s + self.a[i][k] * rhs.a[k][j];
                }
                m.a[i][j] = s;
            }
        }
        m
    }
}
