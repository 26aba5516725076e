//! Material-point solver: incremental minimization of one state `(F, P, z)`
//! per time step under a prescribed stress history.
//!
//! The unknown vector per step is `(F, dP-parameters, z)` — 8 reals in 2D,
//! 18 in 3D; the stress is prescribed, so `F` is free. Each step minimizes
//!
//! ```text
//! zeta(z) W_e(F P^-1) + W_p(P) - sigma_i : F
//!     + R_z^eps(z - z_old) + rho(z_old) R_p^eps(dP - I),   P = dP P_old
//! ```
//!
//! by regularized Newton with exact first/second variations from dual
//! numbers and a backtracking line search that guarantees energy decrease.
//! Convergence additionally requires the closed-form Euler-Lagrange
//! residual to drop below the Newton tolerance, cross-checking the dual
//! arithmetic against the hand-derived constitutive relations every step.

mod dense;
mod history;
mod trace;

pub use dense::NewtonOpts;
pub use history::{parameter_sweep, parameter_sweep_to_csv, run_history, SweepParam};
pub use trace::{Trace, TraceStep, TRACE_CSV_HEADER};

use crate::constitutive::{
    self, elastic_t, hardening_t, rho_t, rp_eps_t, rz_eps_t, zeta_t, InfiniteEnergy,
    MaterialParams, PointState, StateError,
};
use crate::dual::D2;
use crate::linalg::{Mat, TMat, SINGULARITY_FLOOR};
use crate::scalar::Scalar;
use crate::sl::{self, SlParams};
use dense::DenseObjective;

#[derive(Debug, thiserror::Error)]
pub enum PointError {
    #[error(transparent)]
    InfiniteEnergy(#[from] InfiniteEnergy),
    #[error(transparent)]
    ChartSingular(#[from] sl::ParamSingular),
    #[error(transparent)]
    InvalidState(#[from] StateError),
    #[error("time step {tau} does not divide the horizon {horizon}")]
    BadTimeStep { tau: f64, horizon: f64 },
    #[error("Newton failed at step {step} (t = {t}): {detail}")]
    NoConvergence { step: usize, t: f64, detail: String },
    #[error("invalid sweep parameter: {0}")]
    BadSweep(String),
}

/// Prescribed stress history.
#[derive(Clone, Debug)]
pub struct LoadProgram {
    pub kind: LoadKind,
    /// Time horizon T; the wave shapes return to zero load at T.
    pub horizon: f64,
    /// Spatial dimension of the stress tensor (2 or 3).
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub enum LoadKind {
    /// `sigma_11(t) = A asin(sin(pi t)) / (pi/2)`, a triangular wave peaking
    /// at `A` at t = 1/2.
    UniaxialTriangle { a_max: f64 },
    /// Non-proportional square path in the `(sigma_11, sigma_22)` plane:
    /// four equal legs `(0,0) -> (A,0) -> (A,A) -> (0,A) -> (0,0)`.
    BiaxialSquare { a_max: f64 },
    /// Piecewise-linear interpolation of `(t, sigma)` breakpoints.
    CustomTable { breakpoints: Vec<(f64, Mat)> },
}

impl LoadProgram {
    pub fn uniaxial(a_max: f64) -> Self {
        LoadProgram {
            kind: LoadKind::UniaxialTriangle { a_max },
            horizon: 1.0,
            dim: 2,
        }
    }

    pub fn biaxial(a_max: f64) -> Self {
        LoadProgram {
            kind: LoadKind::BiaxialSquare { a_max },
            horizon: 1.0,
            dim: 2,
        }
    }

    pub fn stress_at(&self, t: f64) -> Mat {
        let mut sigma = Mat::zero(self.dim);
        match &self.kind {
            LoadKind::UniaxialTriangle { a_max } => {
                let s11 = a_max * (std::f64::consts::PI * t).sin().asin()
                    / std::f64::consts::FRAC_PI_2;
                sigma.set(0, 0, s11);
            }
            LoadKind::BiaxialSquare { a_max } => {
                let s = (t / self.horizon).clamp(0.0, 1.0);
                let (s11, s22) = if s < 0.25 {
                    (4.0 * s, 0.0)
                } else if s < 0.5 {
                    (1.0, 4.0 * s - 1.0)
                } else if s < 0.75 {
                    (3.0 - 4.0 * s, 1.0)
                } else {
                    (0.0, 4.0 - 4.0 * s)
                };
                sigma.set(0, 0, a_max * s11);
                sigma.set(1, 1, a_max * s22);
            }
            LoadKind::CustomTable { breakpoints } => {
                if let Some(first) = breakpoints.first() {
                    if t <= first.0 {
                        return first.1;
                    }
                }
                for pair in breakpoints.windows(2) {
                    let (t0, s0) = (pair[0].0, &pair[0].1);
                    let (t1, s1) = (pair[1].0, &pair[1].1);
                    if t <= t1 {
                        let w = (t - t0) / (t1 - t0).max(f64::MIN_POSITIVE);
                        return s0.scale(1.0 - w) + s1.scale(w);
                    }
                }
                return breakpoints.last().map(|p| p.1).unwrap_or(sigma);
            }
        }
        sigma
    }
}

/// Outcome of one accepted incremental minimization.
#[derive(Clone, Debug)]
pub struct IncrementResult {
    pub state: PointState,
    /// Stored energy `zeta(z) W_e + W_p` at the new state [MPa].
    pub energy: f64,
    /// Dissipated work of the step (offset so a resting step dissipates 0).
    pub dissipation_increment: f64,
    pub newton_iters: u32,
    /// Closed-form Euler-Lagrange residual at acceptance.
    pub kkt_residual: f64,
}

fn unknown_count(d: usize) -> usize {
    d * d + (d * d - 1) + 1
}

/// Incremental energy at explicit arguments, mainly for tests and oracles.
pub fn incremental_energy(
    f: &Mat,
    q: &SlParams,
    z: f64,
    prev: &PointState,
    sigma_i: &Mat,
    mp: &MaterialParams,
) -> Result<f64, PointError> {
    let d = prev.dim();
    let n = unknown_count(d);
    let mut x = vec![0.0; n];
    pack(&mut x, f, q, z, d);
    energy_generic::<f64>(&x, d, prev, sigma_i, mp).ok_or(PointError::InfiniteEnergy(
        InfiniteEnergy {
            det: f64::NEG_INFINITY,
        },
    ))
}

/// Value, gradient, and Hessian of the incremental energy with respect to
/// the unknown vector `(F, dP-parameters, z)` (row-major Hessian). Exposed
/// so oracles can check the exact variations against finite differences.
pub fn incremental_energy_derivatives(
    f: &Mat,
    q: &SlParams,
    z: f64,
    prev: &PointState,
    sigma_i: &Mat,
    mp: &MaterialParams,
) -> Result<(f64, Vec<f64>, Vec<f64>), PointError> {
    let d = prev.dim();
    let n = unknown_count(d);
    let mut x = vec![0.0; n];
    pack(&mut x, f, q, z, d);
    let out = match d {
        2 => grad_hess_fixed::<8>(&x, d, prev, sigma_i, mp),
        _ => grad_hess_fixed::<18>(&x, d, prev, sigma_i, mp),
    };
    out.ok_or(PointError::InfiniteEnergy(InfiniteEnergy {
        det: f64::NEG_INFINITY,
    }))
}

fn pack(x: &mut [f64], f: &Mat, q: &SlParams, z: f64, d: usize) {
    let mut idx = 0;
    for i in 0..d {
        for j in 0..d {
            x[idx] = f.get(i, j);
            idx += 1;
        }
    }
    match q {
        SlParams::Two(p) => {
            x[idx] = p.p11;
            x[idx + 1] = p.p12;
            x[idx + 2] = p.p21;
            idx += 3;
        }
        SlParams::Three(p) => {
            x[idx..idx + 8].copy_from_slice(&p.p);
            idx += 8;
        }
    }
    x[idx] = z;
}

fn unpack_f<T: Scalar>(x: &[T], d: usize) -> TMat<T> {
    let mut f = TMat::zero(d);
    let mut idx = 0;
    for i in 0..d {
        for j in 0..d {
            f.set(i, j, x[idx]);
            idx += 1;
        }
    }
    f
}

/// The regularized incremental energy over generic scalars.
/// `None` marks an inadmissible point (det <= 0 or chart breakdown).
fn energy_generic<T: Scalar>(
    x: &[T],
    d: usize,
    prev: &PointState,
    sigma_i: &Mat,
    mp: &MaterialParams,
) -> Option<T> {
    let f = unpack_f(x, d);
    let nf = d * d;
    let dp = match d {
        2 => sl::realize2_t(&[x[nf], x[nf + 1], x[nf + 2]]).ok()?,
        _ => sl::realize3_t(x[nf..nf + 8].try_into().unwrap()).ok()?,
    };
    let z = x[x.len() - 1];
    let p = dp * prev.p.lift();
    let p_inv = p.try_inverse(SINGULARITY_FLOOR).ok()?;
    let fe = f * p_inv;
    let we = elastic_t(mp.elastic, &fe, mp).ok()?;
    let wp = hardening_t(&p, mp.hardening);
    let work = sigma_i.lift::<T>().frob(&f);
    let rz = rz_eps_t(z - T::constant(prev.z), mp.sigma_z, mp.eps_reg);
    let a = dp - TMat::identity(d);
    let rho_old = rho_t(prev.z, mp.rho0);
    let rp = T::constant(rho_old) * rp_eps_t(&a, mp.sigma_p, mp.eps_reg);
    Some(zeta_t(z, mp.zeta0) * we + wp - work + rz + rp)
}

fn grad_hess_fixed<const N: usize>(
    x: &[f64],
    d: usize,
    prev: &PointState,
    sigma_i: &Mat,
    mp: &MaterialParams,
) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    let mut seeds = [D2::<N>::constant(0.0); N];
    for i in 0..N {
        seeds[i] = D2::var(x[i], i);
    }
    let e = energy_generic::<D2<N>>(&seeds, d, prev, sigma_i, mp)?;
    let mut h = vec![0.0; N * N];
    for i in 0..N {
        for j in 0..N {
            h[i * N + j] = e.h[i][j];
        }
    }
    Some((e.v, e.g.to_vec(), h))
}

/// Euler-Lagrange residual of the incremental problem, evaluated from the
/// closed-form constitutive relations (not from dual numbers).
fn euler_lagrange_residual(
    x: &[f64],
    d: usize,
    prev: &PointState,
    sigma_i: &Mat,
    mp: &MaterialParams,
) -> f64 {
    let f = unpack_f::<f64>(x, d);
    let nf = d * d;
    let q = SlParams::from_slice(d, &x[nf..nf + (d * d - 1)]);
    let z = x[x.len() - 1];
    let Ok(dp) = q.realize() else {
        return f64::INFINITY;
    };
    let p = dp * prev.p;
    let state = PointState { f, p, z };
    let Ok(sigma_model) = constitutive::pk1_stress(&state, mp) else {
        return f64::INFINITY;
    };
    let r_f = (sigma_model - *sigma_i).norm();

    let Ok(fe) = state.elastic_strain() else {
        return f64::INFINITY;
    };
    let Ok(p_old_inv) = prev.p.inverse() else {
        return f64::INFINITY;
    };
    let a = dp - Mat::identity(d);
    let rho_old = constitutive::rho(prev.z, mp);
    let r_p_full = constitutive::rp_eps_grad(&a, mp).scale(rho_old) * p_old_inv.transpose()
        - fe.transpose() * *sigma_i
        + constitutive::hardening_grad(&p, mp);
    // Project on the chart tangent directions dP_k = (d realize / d q_k) P_old.
    let mut r_p = 0.0_f64;
    for k in 0..(d * d - 1) {
        let dir = chart_tangent(&q, k) * prev.p;
        r_p = r_p.max(r_p_full.frob(&dir).abs());
    }

    let we = match constitutive::elastic_energy(&fe, mp) {
        Ok(w) => w,
        Err(_) => return f64::INFINITY,
    };
    let r_z = constitutive::rz_eps_prime(z - prev.z, mp) + constitutive::zeta_prime(z, mp) * we;
    r_f.max(r_p).max(r_z.abs())
}

/// Derivative of the realized SL(d) matrix in the k-th chart coordinate.
fn chart_tangent(q: &SlParams, k: usize) -> Mat {
    use crate::dual::D1;
    match q {
        SlParams::Two(p) => {
            let seeds = [
                D1::<3>::var(p.p11, 0),
                D1::<3>::var(p.p12, 1),
                D1::<3>::var(p.p21, 2),
            ];
            let m = sl::realize2_t(&seeds).expect("valid chart");
            let mut out = Mat::zero(2);
            for i in 0..2 {
                for j in 0..2 {
                    out.set(i, j, m.get(i, j).g[k]);
                }
            }
            out
        }
        SlParams::Three(p) => {
            let mut seeds = [D1::<8>::constant(0.0); 8];
            for (i, s) in seeds.iter_mut().enumerate() {
                *s = D1::var(p.p[i], i);
            }
            let m = sl::realize3_t(&seeds).expect("valid chart");
            let mut out = Mat::zero(3);
            for i in 0..3 {
                for j in 0..3 {
                    out.set(i, j, m.get(i, j).g[k]);
                }
            }
            out
        }
    }
}

struct PointObjective<'a> {
    d: usize,
    prev: &'a PointState,
    sigma: &'a Mat,
    mp: &'a MaterialParams,
}

impl DenseObjective for PointObjective<'_> {
    fn dim(&self) -> usize {
        unknown_count(self.d)
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        energy_generic::<f64>(x, self.d, self.prev, self.sigma, self.mp)
    }

    fn value_grad_hess(&self, x: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
        match self.d {
            2 => grad_hess_fixed::<8>(x, self.d, self.prev, self.sigma, self.mp),
            _ => grad_hess_fixed::<18>(x, self.d, self.prev, self.sigma, self.mp),
        }
    }

    fn extra_residual(&self, x: &[f64]) -> f64 {
        euler_lagrange_residual(x, self.d, self.prev, self.sigma, self.mp)
    }

    fn value_scale(&self) -> f64 {
        self.mp.mu
    }
}

/// Solve one incremental minimization from `prev` under prescribed stress
/// `sigma_i`, warm-starting `F` at `prev.f`, the plastic increment at the
/// identity, and `z` at `prev.z`.
pub fn newton_minimize(
    prev: &PointState,
    sigma_i: &Mat,
    mp: &MaterialParams,
    opts: &NewtonOpts,
) -> Result<IncrementResult, PointError> {
    prev.validate(mp)?;
    let d = prev.dim();
    let n = unknown_count(d);
    let mut x0 = vec![0.0; n];
    pack(&mut x0, &prev.f, &SlParams::identity(d), prev.z, d);
    let obj = PointObjective {
        d,
        prev,
        sigma: sigma_i,
        mp,
    };
    let report = dense::minimize(&obj, &x0, opts).map_err(|e| PointError::NoConvergence {
        step: 0,
        t: f64::NAN,
        detail: e.to_string(),
    })?;
    Ok(build_result(
        &report.x,
        report.iters,
        report.residual,
        d,
        prev,
        mp,
    ))
}

fn build_result(
    x: &[f64],
    iters: u32,
    residual: f64,
    d: usize,
    prev: &PointState,
    mp: &MaterialParams,
) -> IncrementResult {
    let f = unpack_f::<f64>(x, d);
    let nf = d * d;
    let q = SlParams::from_slice(d, &x[nf..nf + (d * d - 1)]);
    let z = x[x.len() - 1];
    let dp = q.realize().expect("accepted chart is valid");
    let p = dp * prev.p;
    let state = PointState { f, p, z };

    // Unidirectionality and non-negativity up to the regularization scale.
    assert!(
        z <= prev.z + mp.eps_reg && z >= -mp.eps_reg,
        "damage invariant violated: z = {z}, z_old = {}",
        prev.z
    );

    let fe = state.elastic_strain().expect("accepted state");
    let we = constitutive::elastic_energy(&fe, mp).expect("accepted state");
    let energy = constitutive::zeta(z, mp) * we + hardening_t(&p, mp.hardening);
    // Offset such that a resting step (dz = 0, dP = I) dissipates exactly 0.
    let rz0 = constitutive::rz_eps(0.0, mp);
    let dissipation_increment = constitutive::rz_eps(z - prev.z, mp) - rz0
        + constitutive::rho(prev.z, mp) * constitutive::rp_eps(&(dp - Mat::identity(d)), mp);
    IncrementResult {
        state,
        energy,
        dissipation_increment,
        newton_iters: iters,
        kkt_residual: residual,
    }
}
