//! Scalar abstraction shared by plain `f64` evaluation and forward-mode duals.
//!
//! Energy densities are written once against this trait. Instantiated with
//! `f64` they give cheap value-only evaluation (line searches); instantiated
//! with [`crate::dual::D1`]/[`crate::dual::D2`] they yield exact first and
//! second variations.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn constant(v: f64) -> Self;
    /// Value part (the underlying `f64` at the evaluation point).
    fn val(&self) -> f64;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    /// `self^e` for real exponent; only called with positive base.
    fn powf(self, e: f64) -> Self;
    /// Positive part `max(0, x)`. The derivative at exactly 0 is taken as 0.
    fn max_zero(self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(&self) -> f64 {
        *self
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
    #[inline]
    fn max_zero(self) -> Self {
        if self > 0.0 {
            self
        } else {
            0.0
        }
    }
}
