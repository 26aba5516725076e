//! Forward-mode dual numbers carrying first (`D1`) or first and second (`D2`)
//! derivatives with respect to `N` seed variables.
//!
//! Used to obtain exact residuals and tangent matrices of the incremental
//! energies without hand-derived index gymnastics. Correctness is pinned by
//! finite-difference checks in the constitutive and solver test suites.

use crate::scalar::Scalar;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// First-order dual: value and gradient against `N` variables.
#[derive(Clone, Copy, Debug)]
pub struct D1<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
}

/// Second-order dual: value, gradient, and (symmetric) Hessian.
#[derive(Clone, Copy, Debug)]
pub struct D2<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> D1<N> {
    /// Seed the `i`-th independent variable at value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut g = [0.0; N];
        g[i] = 1.0;
        D1 { v, g }
    }

    #[inline]
    fn chain(self, v: f64, d1: f64) -> Self {
        let mut g = [0.0; N];
        for i in 0..N {
            g[i] = d1 * self.g[i];
        }
        D1 { v, g }
    }
}

impl<const N: usize> D2<N> {
    /// Seed the `i`-th independent variable at value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut g = [0.0; N];
        g[i] = 1.0;
        D2 {
            v,
            g,
            h: [[0.0; N]; N],
        }
    }

    /// Apply a smooth scalar function given value and first two derivatives
    /// at `self.v`.
    #[inline]
    fn chain(self, v: f64, d1: f64, d2: f64) -> Self {
        let mut out = D2 {
            v,
            g: [0.0; N],
            h: [[0.0; N]; N],
        };
        for i in 0..N {
            out.g[i] = d1 * self.g[i];
        }
        for i in 0..N {
            let gi = self.g[i];
            for j in 0..N {
                out.h[i][j] = d1 * self.h[i][j] + d2 * gi * self.g[j];
            }
        }
        out
    }
}

impl<const N: usize> Add for D1<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.v += rhs.v;
        for i in 0..N {
            self.g[i] += rhs.g[i];
        }
        self
    }
}

impl<const N: usize> Sub for D1<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.v -= rhs.v;
        for i in 0..N {
            self.g[i] -= rhs.g[i];
        }
        self
    }
}

impl<const N: usize> Mul for D1<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut g = [0.0; N];
        for i in 0..N {
            g[i] = self.g[i] * rhs.v + self.v * rhs.g[i];
        }
        D1 {
            v: self.v * rhs.v,
            g,
        }
    }
}

impl<const N: usize> Div for D1<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.v;
        self * rhs.chain(inv, -inv * inv)
    }
}

impl<const N: usize> Neg for D1<N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for i in 0..N {
            self.g[i] = -self.g[i];
        }
        self
    }
}

impl<const N: usize> Scalar for D1<N> {
    fn zero() -> Self {
        Self::constant(0.0)
    }
    fn one() -> Self {
        Self::constant(1.0)
    }
    fn constant(v: f64) -> Self {
        D1 { v, g: [0.0; N] }
    }
    fn val(&self) -> f64 {
        self.v
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn powf(self, e: f64) -> Self {
        self.chain(self.v.powf(e), e * self.v.powf(e - 1.0))
    }
    fn max_zero(self) -> Self {
        if self.v > 0.0 {
            self
        } else {
            Self::zero()
        }
    }
}

impl<const N: usize> Add for D2<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.v += rhs.v;
        for i in 0..N {
            self.g[i] += rhs.g[i];
        }
        for i in 0..N {
            for j in 0..N {
                self.h[i][j] += rhs.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for D2<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.v -= rhs.v;
        for i in 0..N {
            self.g[i] -= rhs.g[i];
        }
        for i in 0..N {
            for j in 0..N {
                self.h[i][j] -= rhs.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Mul for D2<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut out = D2 {
            v: self.v * rhs.v,
            g: [0.0; N],
            h: [[0.0; N]; N],
        };
        for i in 0..N {
            out.g[i] = self.g[i] * rhs.v + self.v * rhs.g[i];
        }
        for i in 0..N {
            let (agi, bgi) = (self.g[i], rhs.g[i]);
            for j in 0..N {
                out.h[i][j] = self.h[i][j] * rhs.v
                    + self.v * rhs.h[i][j]
                    + agi * rhs.g[j]
                    + bgi * self.g[j];
            }
        }
        out
    }
}

impl<const N: usize> Div for D2<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.v;
        self * rhs.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl<const N: usize> Neg for D2<N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for i in 0..N {
            self.g[i] = -self.g[i];
        }
        for i in 0..N {
            for j in 0..N {
                self.h[i][j] = -self.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Scalar for D2<N> {
    fn zero() -> Self {
        Self::constant(0.0)
    }
    fn one() -> Self {
        Self::constant(1.0)
    }
    fn constant(v: f64) -> Self {
        D2 {
            v,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }
    fn val(&self) -> f64 {
        self.v
    }
    fn ln(self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(self.v.ln(), inv, -inv * inv)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn powf(self, e: f64) -> Self {
        self.chain(
            self.v.powf(e),
            e * self.v.powf(e - 1.0),
            e * (e - 1.0) * self.v.powf(e - 2.0),
        )
    }
    fn max_zero(self) -> Self {
        if self.v > 0.0 {
            self
        } else {
            Self::zero()
        }
    }
}
