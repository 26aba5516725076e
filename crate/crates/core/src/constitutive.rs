//! Energy densities, dissipation potentials, coupling functions, and the
//! closed-form thermodynamic driving forces of the coupled
//! plasticity/damage model.
//!
//! The working stress unit is MPa throughout; steel's Young modulus is stored
//! as 210000 MPa so that the damage yield stress (fractions of an MPa) stays
//! well inside relative tolerances.
//!
//! Everything here exists twice on purpose: a generic kernel over
//! [`Scalar`] (consumed by the solvers through dual numbers) and closed-form
//! `f64` gradients. The two routes cross-check each other in the tests and at
//! every accepted Newton step via the Euler-Lagrange residual.

use crate::linalg::{Mat, TMat, SINGULARITY_FLOOR};
use crate::scalar::Scalar;
use serde::Deserialize;

/// Elastic energy stored per unit volume is infinite: `det F_e <= 0`.
///
/// This is a recoverable signal, not a failure; Newton line searches treat it
/// as "step too long" and backtrack.
#[derive(Debug, Clone, Copy, thiserror::Error)]
#[error("infinite elastic energy: det F_e = {det:.6e} <= 0")]
pub struct InfiniteEnergy {
    pub det: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ConstitutiveError {
    #[error(transparent)]
    InfiniteEnergy(#[from] InfiniteEnergy),
    #[error("plastic strain is singular: det P = {det:.6e}")]
    SingularPlasticStrain { det: f64 },
}

#[derive(Debug, thiserror::Error)]
#[error("invalid material parameter `{key}`: {reason}")]
pub struct ParamError {
    pub key: &'static str,
    pub reason: String,
}

/// Choice of hyperelastic law for the undamaged energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElasticLaw {
    /// Neo-Hookean, the default in two dimensions.
    NeoHooke,
    /// Ogden-type law with exponent `q_e`; required for the 3D material point.
    Ogden,
}

/// Raw material constants as read from a config file. Defaults reproduce the
/// steel-like base parameter set of the uniaxial studies.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialInput {
    /// Young's modulus [MPa].
    pub e_young: f64,
    /// Poisson ratio.
    pub nu: f64,
    /// Kinematic hardening modulus H [MPa].
    pub hardening: f64,
    /// Plastic yield stress [MPa].
    pub sigma_p: f64,
    /// Damage yield stress [MPa].
    pub sigma_z: f64,
    /// Dissipation-coupling floor in (0, 1].
    pub rho0: f64,
    /// Energy-degradation floor in (0, 1].
    pub zeta0: f64,
    /// Regularization parameter for the dissipation potentials.
    pub eps_reg: f64,
    /// Maximal stress amplitude of the load program [MPa].
    pub a_max: f64,
    /// Plastic gradient length-scale coefficient.
    pub mu_p: f64,
    /// Damage gradient length-scale coefficient.
    pub mu_z: f64,
    /// Ogden exponent (>= d when the Ogden law is selected).
    pub q_e: f64,
    /// Diagnostic bound on |P|; exceeding it only logs a warning.
    pub c_k: f64,
    pub elastic: ElasticLaw,
}

impl Default for MaterialInput {
    fn default() -> Self {
        MaterialInput {
            e_young: 210_000.0,
            nu: 0.3,
            hardening: 650.0,
            sigma_p: 250.0,
            sigma_z: 0.4,
            rho0: 0.5,
            zeta0: 0.5,
            eps_reg: 1e-7,
            a_max: 450.0,
            mu_p: 0.0,
            mu_z: 1e-4,
            q_e: 4.0,
            c_k: 10.0,
            elastic: ElasticLaw::NeoHooke,
        }
    }
}

/// Validated constitutive constants with derived Lame parameters.
#[derive(Clone, Debug)]
pub struct MaterialParams {
    pub e_young: f64,
    pub nu: f64,
    /// Shear modulus, mu = E / (2 (1 + nu)) [MPa].
    pub mu: f64,
    /// First Lame parameter, lambda = E nu / ((1 + nu)(1 - 2 nu)) [MPa].
    pub lambda: f64,
    pub hardening: f64,
    pub sigma_p: f64,
    pub sigma_z: f64,
    pub rho0: f64,
    pub zeta0: f64,
    pub eps_reg: f64,
    pub a_max: f64,
    pub mu_p: f64,
    pub mu_z: f64,
    pub q_e: f64,
    pub c_k: f64,
    pub elastic: ElasticLaw,
}

impl TryFrom<MaterialInput> for MaterialParams {
    type Error = ParamError;

    fn try_from(inp: MaterialInput) -> Result<Self, ParamError> {
        let err = |key: &'static str, reason: String| Err(ParamError { key, reason });
        if !(inp.e_young > 0.0) {
            return err("e_young", format!("must be > 0, got {}", inp.e_young));
        }
        if !(inp.nu > -1.0 && inp.nu < 0.5) {
            return err("nu", format!("must lie in (-1, 0.5), got {}", inp.nu));
        }
        let mu = inp.e_young / (2.0 * (1.0 + inp.nu));
        let lambda = inp.e_young * inp.nu / ((1.0 + inp.nu) * (1.0 - 2.0 * inp.nu));
        if lambda < -mu {
            // lambda >= -d mu / 2 with d = 2 also covers d = 3.
            return err("nu", format!("Lame parameters violate lambda >= -mu ({lambda} < {})", -mu));
        }
        for (key, v) in [
            ("hardening", inp.hardening),
            ("sigma_p", inp.sigma_p),
            ("sigma_z", inp.sigma_z),
        ] {
            if !(v > 0.0) {
                return err(key, format!("must be > 0, got {v}"));
            }
        }
        for (key, v) in [("rho0", inp.rho0), ("zeta0", inp.zeta0)] {
            if !(v > 0.0 && v <= 1.0) {
                return err(key, format!("must lie in (0, 1], got {v}"));
            }
        }
        if !(inp.eps_reg > 0.0) {
            return err("eps_reg", format!("must be > 0, got {}", inp.eps_reg));
        }
        if inp.mu_p < 0.0 || inp.mu_z < 0.0 {
            return err("mu_p", "gradient coefficients must be >= 0".into());
        }
        if inp.q_e < 2.0 {
            return err("q_e", format!("must be >= 2, got {}", inp.q_e));
        }
        if !(inp.c_k > 0.0) {
            return err("c_k", format!("must be > 0, got {}", inp.c_k));
        }
        Ok(MaterialParams {
            e_young: inp.e_young,
            nu: inp.nu,
            mu,
            lambda,
            hardening: inp.hardening,
            sigma_p: inp.sigma_p,
            sigma_z: inp.sigma_z,
            rho0: inp.rho0,
            zeta0: inp.zeta0,
            eps_reg: inp.eps_reg,
            a_max: inp.a_max,
            mu_p: inp.mu_p,
            mu_z: inp.mu_z,
            q_e: inp.q_e,
            c_k: inp.c_k,
            elastic: inp.elastic,
        })
    }
}

impl MaterialParams {
    /// Base steel-like parameter set of the uniaxial point studies.
    pub fn base() -> Self {
        MaterialInput::default().try_into().expect("defaults are valid")
    }

    /// Damage block used by the 2D field experiments
    /// (sigma_z = 2/3, rho0 = 0.1, zeta0 = 0.5, mu_z = 1e-4).
    pub fn base_fem2d() -> Self {
        let inp = MaterialInput {
            sigma_z: 2.0 / 3.0,
            rho0: 0.1,
            ..MaterialInput::default()
        };
        inp.try_into().expect("defaults are valid")
    }

    /// Ogden prefactor `c = mu / (q_e d^((q_e-2)/2))`; depends on the
    /// dimension, so it is derived here rather than stored.
    pub fn ogden_prefactor(&self, d: usize) -> f64 {
        self.mu / (self.q_e * (d as f64).powf((self.q_e - 2.0) / 2.0))
    }

    /// Rebuild with one named parameter replaced (used by sweeps).
    pub fn with_value(&self, key: &str, value: f64) -> Result<Self, ParamError> {
        let mut inp = MaterialInput {
            e_young: self.e_young,
            nu: self.nu,
            hardening: self.hardening,
            sigma_p: self.sigma_p,
            sigma_z: self.sigma_z,
            rho0: self.rho0,
            zeta0: self.zeta0,
            eps_reg: self.eps_reg,
            a_max: self.a_max,
            mu_p: self.mu_p,
            mu_z: self.mu_z,
            q_e: self.q_e,
            c_k: self.c_k,
            elastic: self.elastic,
        };
        match key {
            "sigma_p" => inp.sigma_p = value,
            "H" | "hardening" => inp.hardening = value,
            "sigma_z" => inp.sigma_z = value,
            "rho0" => inp.rho0 = value,
            "zeta0" => inp.zeta0 = value,
            "eps_reg" => inp.eps_reg = value,
            "e_young" => inp.e_young = value,
            "a_max" => inp.a_max = value,
            _ => {
                return Err(ParamError {
                    key: "vary",
                    reason: format!("unknown parameter name `{key}`"),
                })
            }
        }
        inp.try_into()
    }
}

/// State of one material point: deformation gradient, plastic strain on
/// SL(d), and scalar damage.
#[derive(Clone, Copy, Debug)]
pub struct PointState {
    pub f: Mat,
    pub p: Mat,
    pub z: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum StateError {
    #[error("plastic strain left SL(d): det P = {det}")]
    NotIsochoric { det: f64 },
    #[error("interpenetration: det(F P^-1) = {det} <= 0")]
    Interpenetration { det: f64 },
    #[error("damage z = {z} outside [-eps, 1]")]
    DamageRange { z: f64 },
}

impl PointState {
    /// Pristine rest state `(I, I, 1)`.
    pub fn pristine(d: usize) -> Self {
        PointState {
            f: Mat::identity(d),
            p: Mat::identity(d),
            z: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// Elastic strain `F_e = F P^-1`.
    pub fn elastic_strain(&self) -> Result<Mat, ConstitutiveError> {
        let p_inv = self
            .p
            .try_inverse(SINGULARITY_FLOOR)
            .map_err(|e| ConstitutiveError::SingularPlasticStrain { det: e.det })?;
        Ok(self.f * p_inv)
    }

    pub fn validate(&self, mp: &MaterialParams) -> Result<(), StateError> {
        let det_p = self.p.det();
        if (det_p - 1.0).abs() > 1e-10 {
            return Err(StateError::NotIsochoric { det: det_p });
        }
        // det(F P^-1) = det F since det P = 1.
        let det_fe = self.f.det();
        if det_fe <= 0.0 {
            return Err(StateError::Interpenetration { det: det_fe });
        }
        if self.z < -mp.eps_reg || self.z > 1.0 + 1e-12 {
            return Err(StateError::DamageRange { z: self.z });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Generic kernel: scalar-polymorphic densities consumed by the solvers.
// ---------------------------------------------------------------------------

pub(crate) fn neo_hooke_t<T: Scalar>(
    fe: &TMat<T>,
    mu: f64,
    lambda: f64,
) -> Result<T, InfiniteEnergy> {
    let det = fe.det();
    if det.val() <= 0.0 {
        return Err(InfiniteEnergy { det: det.val() });
    }
    let d = fe.dim() as f64;
    let half_mu = T::constant(0.5 * mu);
    let one = T::one();
    let gamma = T::constant(-mu) * det.ln()
        + T::constant(0.5 * lambda) * (det - one) * (det - one)
        - T::constant(0.5 * mu * d);
    Ok(half_mu * fe.frob(fe) + gamma)
}

pub(crate) fn ogden_t<T: Scalar>(
    fe: &TMat<T>,
    mu: f64,
    lambda: f64,
    q_e: f64,
) -> Result<T, InfiniteEnergy> {
    let det = fe.det();
    if det.val() <= 0.0 {
        return Err(InfiniteEnergy { det: det.val() });
    }
    let d = fe.dim() as f64;
    let c = mu / (q_e * d.powf((q_e - 2.0) / 2.0));
    let one = T::one();
    let psi = T::constant(-mu) * det.ln()
        + T::constant(0.5 * lambda) * (det - one) * (det - one)
        - T::constant(mu * d / q_e);
    Ok(T::constant(c) * fe.frob(fe).powf(q_e / 2.0) + psi)
}

pub(crate) fn elastic_t<T: Scalar>(
    law: ElasticLaw,
    fe: &TMat<T>,
    mp: &MaterialParams,
) -> Result<T, InfiniteEnergy> {
    match law {
        ElasticLaw::NeoHooke => neo_hooke_t(fe, mp.mu, mp.lambda),
        ElasticLaw::Ogden => ogden_t(fe, mp.mu, mp.lambda, mp.q_e),
    }
}

pub(crate) fn hardening_t<T: Scalar>(p: &TMat<T>, h: f64) -> T {
    let diff = *p - TMat::identity(p.dim());
    T::constant(0.5 * h) * diff.frob(&diff)
}

pub(crate) fn zeta_t<T: Scalar>(z: T, zeta0: f64) -> T {
    let zp = z.max_zero();
    T::constant(zeta0) + T::constant(1.0 - zeta0) * zp * zp
}

pub(crate) fn rho_t<T: Scalar>(z: T, rho0: f64) -> T {
    let zp = z.max_zero();
    T::constant(rho0) + T::constant(1.0 - rho0) * zp * zp
}

pub(crate) fn rz_eps_t<T: Scalar>(zdot: T, sigma_z: f64, eps: f64) -> T {
    if zdot.val() < -eps {
        T::constant(sigma_z) * (-zdot)
    } else {
        let s = zdot + T::constant(eps);
        T::constant(sigma_z) * (-zdot + s * s * s * T::constant(1.0 / (3.0 * eps * eps)))
    }
}

pub(crate) fn rp_eps_t<T: Scalar>(a: &TMat<T>, sigma_p: f64, eps: f64) -> T {
    let n2 = a.frob(a);
    T::constant(sigma_p) * ((n2 + T::constant(eps * eps)).sqrt() - T::constant(eps))
}

// ---------------------------------------------------------------------------
// Public f64 interface with closed-form gradients.
// ---------------------------------------------------------------------------

/// Neo-Hookean energy `mu/2 |F_e|^2 + Gamma(det F_e)` with
/// `Gamma(d) = -mu ln d + lambda/2 (d-1)^2 - mu dim/2`.
pub fn neo_hooke(fe: &Mat, mp: &MaterialParams) -> Result<f64, InfiniteEnergy> {
    neo_hooke_t(fe, mp.mu, mp.lambda)
}

/// `D W_e(F_e) = mu (F_e - F_e^-T) + lambda (det F_e - 1) cof F_e`.
pub fn neo_hooke_grad(fe: &Mat, mp: &MaterialParams) -> Result<Mat, InfiniteEnergy> {
    let det = fe.det();
    if det <= 0.0 {
        return Err(InfiniteEnergy { det });
    }
    let fe_inv_t = fe
        .try_inverse(SINGULARITY_FLOOR)
        .map_err(|e| InfiniteEnergy { det: e.det })?
        .transpose();
    Ok((*fe - fe_inv_t).scale(mp.mu) + fe.cof().scale(mp.lambda * (det - 1.0)))
}

/// Ogden-type energy `c |F_e|^q_e + Psi(det F_e)`.
pub fn ogden(fe: &Mat, mp: &MaterialParams) -> Result<f64, InfiniteEnergy> {
    ogden_t(fe, mp.mu, mp.lambda, mp.q_e)
}

pub fn ogden_grad(fe: &Mat, mp: &MaterialParams) -> Result<Mat, InfiniteEnergy> {
    let det = fe.det();
    if det <= 0.0 {
        return Err(InfiniteEnergy { det });
    }
    let d = fe.dim();
    let c = mp.ogden_prefactor(d);
    let n2 = fe.frob(fe);
    let psi_prime = -mp.mu / det + mp.lambda * (det - 1.0);
    Ok(fe.scale(c * mp.q_e * n2.powf(mp.q_e / 2.0 - 1.0)) + fe.cof().scale(psi_prime))
}

/// Elastic energy under the configured law.
pub fn elastic_energy(fe: &Mat, mp: &MaterialParams) -> Result<f64, InfiniteEnergy> {
    elastic_t(mp.elastic, fe, mp)
}

pub fn elastic_energy_grad(fe: &Mat, mp: &MaterialParams) -> Result<Mat, InfiniteEnergy> {
    match mp.elastic {
        ElasticLaw::NeoHooke => neo_hooke_grad(fe, mp),
        ElasticLaw::Ogden => ogden_grad(fe, mp),
    }
}

/// Kinematic hardening potential `H/2 |P - I|^2`.
///
/// The compactness constraint `P in K` is replaced by a warn-only diagnostic
/// `|P| <= c_K`; it is never active in the experiments.
pub fn hardening(p: &Mat, mp: &MaterialParams) -> f64 {
    let norm = p.norm();
    if norm > mp.c_k {
        log::warn!("|P| = {norm:.3} exceeds the diagnostic bound c_K = {}", mp.c_k);
    }
    hardening_t(p, mp.hardening)
}

pub fn hardening_grad(p: &Mat, mp: &MaterialParams) -> Mat {
    (*p - Mat::identity(p.dim())).scale(mp.hardening)
}

/// Energy-degradation function `zeta(z) = zeta0 + (1 - zeta0) (z^+)^2`.
pub fn zeta(z: f64, mp: &MaterialParams) -> f64 {
    zeta_t(z, mp.zeta0)
}

/// `zeta'(z) = 2 (1 - zeta0) z^+`.
pub fn zeta_prime(z: f64, mp: &MaterialParams) -> f64 {
    2.0 * (1.0 - mp.zeta0) * z.max(0.0)
}

/// Dissipation-coupling function `rho(z) = rho0 + (1 - rho0) (z^+)^2`;
/// `rho(z) sigma_p` is the effective plastic yield stress.
pub fn rho(z: f64, mp: &MaterialParams) -> f64 {
    rho_t(z, mp.rho0)
}

/// Regularized damage dissipation; C^2 with `(R_z^eps)'(0) = 0`.
pub fn rz_eps(zdot: f64, mp: &MaterialParams) -> f64 {
    rz_eps_t(zdot, mp.sigma_z, mp.eps_reg)
}

pub fn rz_eps_prime(zdot: f64, mp: &MaterialParams) -> f64 {
    let eps = mp.eps_reg;
    if zdot < -eps {
        -mp.sigma_z
    } else {
        let s = zdot + eps;
        mp.sigma_z * (-1.0 + s * s / (eps * eps))
    }
}

/// Regularized plastic dissipation `sigma_p (sqrt(A:A + eps^2) - eps)`.
pub fn rp_eps(a: &Mat, mp: &MaterialParams) -> f64 {
    rp_eps_t(a, mp.sigma_p, mp.eps_reg)
}

pub fn rp_eps_grad(a: &Mat, mp: &MaterialParams) -> Mat {
    let denom = (a.frob(a) + mp.eps_reg * mp.eps_reg).sqrt();
    a.scale(mp.sigma_p / denom)
}

/// First Piola-Kirchhoff stress `zeta(z) D W_e(F P^-1) P^-T`.
pub fn pk1_stress(s: &PointState, mp: &MaterialParams) -> Result<Mat, ConstitutiveError> {
    let p_inv = s
        .p
        .try_inverse(SINGULARITY_FLOOR)
        .map_err(|e| ConstitutiveError::SingularPlasticStrain { det: e.det })?;
    let fe = s.f * p_inv;
    let dwe = elastic_energy_grad(&fe, mp)?;
    Ok((dwe * p_inv.transpose()).scale(zeta(s.z, mp)))
}

/// Driving force on the plastic strain, `X = -F_e^T sigma + H (P - I)`.
pub fn driving_force_x(s: &PointState, mp: &MaterialParams) -> Result<Mat, ConstitutiveError> {
    let sigma = pk1_stress(s, mp)?;
    let fe = s.elastic_strain()?;
    Ok(-(fe.transpose() * sigma) + hardening_grad(&s.p, mp))
}

/// Driving force on damage, `xi = zeta'(z) W_e(F_e)`.
pub fn driving_force_xi(s: &PointState, mp: &MaterialParams) -> Result<f64, ConstitutiveError> {
    let fe = s.elastic_strain()?;
    let we = elastic_energy(&fe, mp)?;
    Ok(zeta_prime(s.z, mp) * we)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn base() -> MaterialParams {
        MaterialParams::base()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }

    /// Central finite difference of a matrix-to-scalar map.
    fn fd_grad(f: impl Fn(&Mat) -> f64, at: &Mat, h: f64) -> Mat {
        let d = at.dim();
        let mut g = Mat::zero(d);
        for i in 0..d {
            for j in 0..d {
                let mut p = *at;
                p.set(i, j, at.get(i, j) + h);
                let mut m = *at;
                m.set(i, j, at.get(i, j) - h);
                g.set(i, j, (f(&p) - f(&m)) / (2.0 * h));
            }
        }
        g
    }

    fn random_fe(rng: &mut ChaCha8Rng, d: usize) -> Mat {
        loop {
            let mut m = Mat::identity(d);
            for i in 0..d {
                for j in 0..d {
                    let base = if i == j { 1.0 } else { 0.0 };
                    m.set(i, j, base + rng.gen_range(-0.3..0.3));
                }
            }
            if m.det() > 0.5 {
                return m;
            }
        }
    }

    #[test]
    fn lame_parameters_match_table() {
        let mp = base();
        assert!((mp.mu - 80769.23076923077).abs() < 1e-6);
        assert!((mp.lambda - 121153.84615384616).abs() < 1e-6);
    }

    #[test]
    fn neo_hooke_vanishes_at_identity() {
        let mp = base();
        for d in [2, 3] {
            assert_eq!(neo_hooke(&Mat::identity(d), &mp).unwrap(), 0.0);
            let g = neo_hooke_grad(&Mat::identity(d), &mp).unwrap();
            assert!(g.norm() < 1e-12);
        }
    }

    #[test]
    fn neo_hooke_simple_values() {
        let mp = MaterialParams::with_lame_for_tests(1.0, 0.0);
        let w = neo_hooke(&Mat::diag(&[2.0, 1.0]), &mp).unwrap();
        assert!((w - 0.8068528194400547).abs() < 1e-14);
        // Frozen via 40-digit evaluation of the same formula. The f64 route
        // cancels ~1e5-sized terms down to 0.14, so 1e-9 relative is the
        // attainable agreement.
        let mp = base();
        let w = neo_hooke(&Mat::diag(&[1.001, 1.0]), &mp).unwrap();
        assert!(
            rel_err(w, 0.14131925094539807) < 1e-9,
            "got {w}, expected 0.14131925094539807"
        );
    }

    #[test]
    fn neo_hooke_grad_hand_value() {
        let mp = MaterialParams::with_lame_for_tests(1.0, 1.0);
        let g = neo_hooke_grad(&Mat::diag(&[2.0, 1.0]), &mp).unwrap();
        assert!((g.get(0, 0) - 2.5).abs() < 1e-14);
        assert!((g.get(1, 1) - 2.0).abs() < 1e-14);
        assert!(g.get(0, 1).abs() < 1e-14 && g.get(1, 0).abs() < 1e-14);
    }

    #[test]
    fn neo_hooke_rejects_nonpositive_det() {
        let mp = base();
        assert!(neo_hooke(&Mat::diag(&[-1.0, 1.0]), &mp).is_err());
        assert!(neo_hooke_grad(&Mat::diag(&[0.0, 1.0]), &mp).is_err());
    }

    #[test]
    fn energy_blows_up_under_compression() {
        let mp = base();
        let w = |d: f64| neo_hooke(&Mat::diag(&[d, 1.0]), &mp).unwrap();
        assert!(w(1e-1) < w(1e-2) && w(1e-2) < w(1e-3));
    }

    #[test]
    fn frame_indifference() {
        let mp = base();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let fe = random_fe(&mut rng, 2);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let q = Mat::new2([[th.cos(), -th.sin()], [th.sin(), th.cos()]]);
            let a = neo_hooke(&fe, &mp).unwrap();
            let b = neo_hooke(&(q * fe), &mp).unwrap();
            assert!(rel_err(a, b) < 1e-12, "{a} vs {b}");
        }
        // 3D rotation about a random axis via Rodrigues.
        for _ in 0..50 {
            let fe = random_fe(&mut rng, 3);
            let axis = {
                let v = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-3);
                [v[0] / n, v[1] / n, v[2] / n]
            };
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (s, c) = th.sin_cos();
            let k = Mat::new3([
                [0.0, -axis[2], axis[1]],
                [axis[2], 0.0, -axis[0]],
                [-axis[1], axis[0], 0.0],
            ]);
            let q = Mat::identity(3) + k.scale(s) + (k * k).scale(1.0 - c);
            let a = ogden(&fe, &mp).unwrap();
            let b = ogden(&(q * fe), &mp).unwrap();
            assert!(rel_err(a, b) < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mp = base();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let fe = random_fe(&mut rng, 2);
            let h = 1e-6 * fe.norm();
            let g = neo_hooke_grad(&fe, &mp).unwrap();
            let fd = fd_grad(|m| neo_hooke(m, &mp).unwrap(), &fe, h);
            assert!((g - fd).norm() / g.norm().max(1.0) < 1e-6);
        }
        for _ in 0..50 {
            let fe = random_fe(&mut rng, 3);
            let h = 1e-6 * fe.norm();
            let g = ogden_grad(&fe, &mp).unwrap();
            let fd = fd_grad(|m| ogden(m, &mp).unwrap(), &fe, h);
            assert!((g - fd).norm() / g.norm().max(1.0) < 1e-6);
        }
        // Hardening gradient H (P - I).
        let p = Mat::new2([[1.1, 0.05], [-0.03, 1.0 / 1.1]]);
        let g = hardening_grad(&p, &mp);
        let fd = fd_grad(|m| hardening_t(m, mp.hardening), &p, 1e-6);
        assert!((g - fd).norm() < 1e-5);
    }

    #[test]
    fn ogden_is_stationary_at_identity_and_degenerates_at_q2() {
        let mp = base();
        for d in [2, 3] {
            assert!(ogden(&Mat::identity(d), &mp).unwrap().abs() < 1e-12);
            assert!(ogden_grad(&Mat::identity(d), &mp).unwrap().norm() < 1e-12);
            // FD resolution at mu ~ 8e4 is eps*mu/h ~ 1e-5; confirm
            // stationarity at that scale.
            let fd = fd_grad(|m| ogden(m, &mp).unwrap(), &Mat::identity(d), 1e-5);
            assert!(fd.norm() < 1e-4, "fd norm {}", fd.norm());
        }
        // At q_e = 2 the prefactor is mu/2 and Psi coincides with Gamma, so
        // the Ogden law degenerates to the Neo-Hookean one; for q_e > 2 they
        // differ away from the identity.
        let mut inp = MaterialInput::default();
        inp.q_e = 2.0;
        let mp2: MaterialParams = inp.try_into().unwrap();
        let fe = Mat::diag(&[1.05, 0.97]);
        let a = ogden(&fe, &mp2).unwrap();
        let b = neo_hooke(&fe, &mp2).unwrap();
        assert!(rel_err(a, b) < 1e-12);
        let a4 = ogden(&fe, &base()).unwrap();
        assert!((a4 - b).abs() > 1e-6);
    }

    #[test]
    fn hardening_values() {
        let mp = base();
        assert_eq!(hardening(&Mat::identity(2), &mp), 0.0);
        let p = Mat::diag(&[1.1, 1.0 / 1.1]);
        assert!(rel_err(hardening(&p, &mp), 5.935950413223141) < 1e-14);
    }

    #[test]
    fn zeta_rho_values_and_monotonicity() {
        let mp = base(); // zeta0 = rho0 = 0.5
        assert_eq!(zeta(1.0, &mp), 1.0);
        assert_eq!(zeta(-0.3, &mp), 0.5);
        assert_eq!(zeta(0.5, &mp), 0.625);
        assert_eq!(rho(1.0, &mp), 1.0);
        assert_eq!(rho(0.0, &mp), 0.5);
        assert_eq!(rho(0.0, &mp) * mp.sigma_p, 125.0);
        let mut prev_z = f64::NEG_INFINITY;
        let mut prev_r = f64::NEG_INFINITY;
        for i in 0..=200 {
            let z = -1.0 + 2.0 * (i as f64) / 200.0;
            let (vz, vr) = (zeta(z, &mp), rho(z, &mp));
            assert!(vz >= prev_z - 1e-15 && vr >= prev_r - 1e-15);
            if z <= 0.0 {
                assert_eq!(vz, mp.zeta0);
                assert_eq!(vr, mp.rho0);
            }
            prev_z = vz;
            prev_r = vr;
        }
    }

    #[test]
    fn rz_eps_branch_values() {
        let mp = base();
        let eps = mp.eps_reg;
        assert!(rel_err(rz_eps(0.0, &mp), mp.sigma_z * eps / 3.0) < 1e-12);
        assert!(rel_err(rz_eps(-2.0 * eps, &mp), 2.0 * mp.sigma_z * eps) < 1e-12);
        // Derivative continuity at -eps: both branches give -sigma_z.
        let left = rz_eps_prime(-eps - 1e-25, &mp);
        let right = rz_eps_prime(-eps, &mp);
        assert_eq!(left, -mp.sigma_z);
        assert!((right - -mp.sigma_z).abs() < 1e-12);
        assert_eq!(rz_eps_prime(0.0, &mp), 0.0);
        // Nonnegative with minimum value sigma_z eps / 3 at 0.
        for i in -100..100 {
            let zd = (i as f64) * 0.1 * eps;
            assert!(rz_eps(zd, &mp) >= mp.sigma_z * eps / 3.0 - 1e-20);
        }
    }

    #[test]
    fn rp_eps_values_and_asymptotics() {
        let mp = base();
        assert_eq!(rp_eps(&Mat::zero(2), &mp), 0.0);
        assert!(rp_eps_grad(&Mat::zero(2), &mp).norm() == 0.0);
        let a = Mat::new2([[0.3, -0.1], [0.2, 0.05]]);
        let exact = mp.sigma_p * a.norm();
        assert!((rp_eps(&a, &mp) - exact).abs() <= mp.sigma_p * mp.eps_reg);
        let fd = fd_grad(|m| rp_eps(m, &mp), &a, 1e-7);
        assert!((rp_eps_grad(&a, &mp) - fd).norm() / fd.norm() < 1e-6);
    }

    #[test]
    fn dissipation_potentials_are_convex() {
        let mp = base();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = rng.gen_range(-5.0..5.0) * mp.eps_reg;
            let b = rng.gen_range(-5.0..5.0) * mp.eps_reg;
            let mid = rz_eps(0.5 * (a + b), &mp);
            assert!(mid <= 0.5 * (rz_eps(a, &mp) + rz_eps(b, &mp)) + 1e-18);
        }
        for _ in 0..200 {
            let mut a = Mat::zero(2);
            let mut b = Mat::zero(2);
            for i in 0..2 {
                for j in 0..2 {
                    a.set(i, j, rng.gen_range(-0.5..0.5));
                    b.set(i, j, rng.gen_range(-0.5..0.5));
                }
            }
            let mid = rp_eps(&(a + b).scale(0.5), &mp);
            assert!(mid <= 0.5 * (rp_eps(&a, &mp) + rp_eps(&b, &mp)) + 1e-12);
        }
    }

    #[test]
    fn pk1_and_driving_forces_vanish_at_rest() {
        let mp = base();
        let s = PointState::pristine(2);
        assert!(pk1_stress(&s, &mp).unwrap().norm() < 1e-12);
        assert!(driving_force_x(&s, &mp).unwrap().norm() < 1e-12);
        assert_eq!(driving_force_xi(&s, &mp).unwrap(), 0.0);
    }

    #[test]
    fn damage_scaling_of_stress() {
        let mp = base();
        let f = Mat::new2([[1.02, 0.01], [-0.02, 0.99]]);
        let p = Mat::identity(2);
        let undamaged = pk1_stress(&PointState { f, p, z: 1.0 }, &mp).unwrap();
        let floor = pk1_stress(&PointState { f, p, z: 0.0 }, &mp).unwrap();
        let ratio = floor.get(0, 0) / undamaged.get(0, 0);
        assert!(rel_err(ratio, mp.zeta0) < 1e-12);
        // z <= 0 kills the damage driving force.
        assert_eq!(
            driving_force_xi(&PointState { f, p, z: -0.1 }, &mp).unwrap(),
            0.0
        );
    }

    #[test]
    fn pk1_matches_fd_of_stored_energy_in_f() {
        let mp = base();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let f = random_fe(&mut rng, 2);
            let q = crate::sl::SlParams2 {
                p11: 1.0 + rng.gen_range(-0.1..0.1),
                p12: rng.gen_range(-0.1..0.1),
                p21: rng.gen_range(-0.1..0.1),
            };
            let p = q.realize().unwrap();
            let z = rng.gen_range(0.2..1.0);
            let s = PointState { f, p, z };
            if s.elastic_strain().unwrap().det() < 0.3 {
                continue;
            }
            let sigma = pk1_stress(&s, &mp).unwrap();
            let w = |fm: &Mat| {
                let st = PointState { f: *fm, p, z };
                zeta(z, &mp) * elastic_energy(&st.elastic_strain().unwrap(), &mp).unwrap()
                    + hardening_t(&p, mp.hardening)
            };
            let fd = fd_grad(w, &f, 1e-6);
            assert!((sigma - fd).norm() / sigma.norm().max(1.0) < 1e-5);
        }
    }

    #[test]
    fn driving_force_x_matches_fd_along_sl_tangents() {
        let mp = base();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let f = random_fe(&mut rng, 2);
            let q = crate::sl::SlParams2 {
                p11: 1.0 + rng.gen_range(-0.08..0.08),
                p12: rng.gen_range(-0.08..0.08),
                p21: rng.gen_range(-0.08..0.08),
            };
            let p = q.realize().unwrap();
            let z = rng.gen_range(0.2..1.0);
            let s = PointState { f, p, z };
            if s.elastic_strain().unwrap().det() < 0.3 {
                continue;
            }
            let x = driving_force_x(&s, &mp).unwrap();
            // Trace-free directions T applied as P(t) = (I + t T) P.
            let tangents = [
                Mat::new2([[1.0, 0.0], [0.0, -1.0]]),
                Mat::new2([[0.0, 1.0], [0.0, 0.0]]),
                Mat::new2([[0.0, 0.0], [1.0, 0.0]]),
            ];
            for t_dir in tangents {
                let h = 1e-7;
                let w_at = |t: f64| {
                    let pt = (Mat::identity(2) + t_dir.scale(t)) * p;
                    let st = PointState { f, p: pt, z };
                    zeta(z, &mp) * elastic_energy(&st.elastic_strain().unwrap(), &mp).unwrap()
                        + hardening_t(&pt, mp.hardening)
                };
                let fd = (w_at(h) - w_at(-h)) / (2.0 * h);
                let analytic = x.frob(&(t_dir * p));
                assert!(
                    (fd - analytic).abs() / analytic.abs().max(1.0) < 1e-5,
                    "dir mismatch: fd {fd} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn xi_matches_fd_in_z() {
        let mp = base();
        let f = Mat::new2([[1.05, 0.02], [0.0, 0.98]]);
        let s = PointState {
            f,
            p: Mat::identity(2),
            z: 0.7,
        };
        let xi = driving_force_xi(&s, &mp).unwrap();
        let h = 1e-6;
        let w = |z: f64| zeta(z, &mp) * elastic_energy(&f, &mp).unwrap();
        let fd = (w(0.7 + h) - w(0.7 - h)) / (2.0 * h);
        assert!(rel_err(xi, fd) < 1e-8);
    }

    #[test]
    fn param_validation_errors_name_the_key() {
        let mut inp = MaterialInput::default();
        inp.rho0 = 0.0;
        let err = MaterialParams::try_from(inp).unwrap_err();
        assert_eq!(err.key, "rho0");
        let mut inp = MaterialInput::default();
        inp.sigma_z = -1.0;
        assert_eq!(MaterialParams::try_from(inp).unwrap_err().key, "sigma_z");
    }

    #[test]
    fn state_validation() {
        let mp = base();
        let mut s = PointState::pristine(2);
        s.validate(&mp).unwrap();
        s.p = Mat::diag(&[1.1, 1.0]);
        assert!(matches!(s.validate(&mp), Err(StateError::NotIsochoric { .. })));
        let mut s = PointState::pristine(2);
        s.f = Mat::diag(&[-1.0, 1.0]);
        assert!(matches!(
            s.validate(&mp),
            Err(StateError::Interpenetration { .. })
        ));
    }
}

#[cfg(test)]
impl MaterialParams {
    /// Bare parameters with prescribed Lame constants, for hand-checkable
    /// test values.
    pub(crate) fn with_lame_for_tests(mu: f64, lambda: f64) -> Self {
        let mut mp = MaterialParams::base();
        mp.mu = mu;
        mp.lambda = lambda;
        mp
    }
}
