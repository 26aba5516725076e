//! Local parametrizations of SL(2) and SL(3) and multiplicative plastic
//! updates.
//!
//! The last matrix entry is derived from the others so that the realized
//! matrix has unit determinant by construction. The chart is only valid near
//! the identity, which is where the solvers live: the unknown of every time
//! step is the increment `dP`, recentered at the identity, and the plastic
//! strain is accumulated as `P = dP * P_old`.

use crate::linalg::{Mat, TMat};
use crate::scalar::Scalar;

/// Denominator magnitudes below this make the chart unusable.
pub const PARAM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, thiserror::Error)]
#[error("SL(d) parametrization is singular (denominator = {denom:.3e})")]
pub struct ParamSingular {
    pub denom: f64,
}

/// SL(2) chart: `[[p11, p12], [p21, (1 + p12 p21)/p11]]`, `p11 != 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlParams2 {
    pub p11: f64,
    pub p12: f64,
    pub p21: f64,
}

/// SL(3) chart: eight independent entries, `p33` derived,
/// `p11 p22 != p21 p12`. Entry order is row-major without `p33`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlParams3 {
    pub p: [f64; 8],
}

/// Either chart, dimension chosen at runtime.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SlParams {
    Two(SlParams2),
    Three(SlParams3),
}

impl SlParams2 {
    pub fn identity() -> Self {
        SlParams2 {
            p11: 1.0,
            p12: 0.0,
            p21: 0.0,
        }
    }

    pub fn realize(&self) -> Result<Mat, ParamSingular> {
        realize2_t(&[self.p11, self.p12, self.p21])
    }
}

impl SlParams3 {
    pub fn identity() -> Self {
        SlParams3 {
            p: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn realize(&self) -> Result<Mat, ParamSingular> {
        realize3_t(&self.p)
    }
}

impl SlParams {
    pub fn identity(d: usize) -> Self {
        match d {
            2 => SlParams::Two(SlParams2::identity()),
            3 => SlParams::Three(SlParams3::identity()),
            _ => panic!("dimension must be 2 or 3"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SlParams::Two(_) => 2,
            SlParams::Three(_) => 3,
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            SlParams::Two(_) => 3,
            SlParams::Three(_) => 8,
        }
    }

    pub fn from_slice(d: usize, q: &[f64]) -> Self {
        match d {
            2 => SlParams::Two(SlParams2 {
                p11: q[0],
                p12: q[1],
                p21: q[2],
            }),
            3 => SlParams::Three(SlParams3 {
                p: q.try_into().expect("eight parameters in 3D"),
            }),
            _ => panic!("dimension must be 2 or 3"),
        }
    }

    pub fn realize(&self) -> Result<Mat, ParamSingular> {
        match self {
            SlParams::Two(q) => q.realize(),
            SlParams::Three(q) => q.realize(),
        }
    }
}

/// Realize the SL(2) chart over any scalar type.
pub(crate) fn realize2_t<T: Scalar>(q: &[T; 3]) -> Result<TMat<T>, ParamSingular> {
    let (p11, p12, p21) = (q[0], q[1], q[2]);
    if p11.val().abs() < PARAM_FLOOR {
        return Err(ParamSingular { denom: p11.val() });
    }
    let p22 = (T::one() + p12 * p21) / p11;
    let mut m = TMat::zero(2);
    m.set(0, 0, p11);
    m.set(0, 1, p12);
    m.set(1, 0, p21);
    m.set(1, 1, p22);
    Ok(m)
}

/// Realize the SL(3) chart over any scalar type.
pub(crate) fn realize3_t<T: Scalar>(q: &[T; 8]) -> Result<TMat<T>, ParamSingular> {
    let [p11, p12, p13, p21, p22, p23, p31, p32] = *q;
    let denom = p11 * p22 - p21 * p12;
    if denom.val().abs() < PARAM_FLOOR {
        return Err(ParamSingular { denom: denom.val() });
    }
    let p33 = (T::one() + p23 * (p11 * p32 - p12 * p31) + p13 * (p31 * p22 - p21 * p32)) / denom;
    let mut m = TMat::zero(3);
    m.set(0, 0, p11);
    m.set(0, 1, p12);
    m.set(0, 2, p13);
    m.set(1, 0, p21);
    m.set(1, 1, p22);
    m.set(1, 2, p23);
    m.set(2, 0, p31);
    m.set(2, 1, p32);
    m.set(2, 2, p33);
    Ok(m)
}

/// Multiplicative update `P = realize(q) * P_old`.
pub fn multiplicative_update(q: &SlParams, p_old: &Mat) -> Result<Mat, ParamSingular> {
    let dp = q.realize()?;
    debug_assert!((p_old.det() - 1.0).abs() < 1e-8, "P_old left SL(d)");
    Ok(dp * *p_old)
}
