//! Rate-independent finite-strain elastoplasticity coupled with isotropic damage.
//!
//! The library provides two solver layers built on the same constitutive core:
//!
//! * a material-point engine ([`point`]) that minimizes the incremental energy
//!   of a single state `(F, P, z)` under a prescribed stress history, and
//! * a 2D quasistatic finite-element engine ([`fem2d`]) for plate-with-hole
//!   scenarios with traction or penalty-Dirichlet loading.
//!
//! Both are driven by regularized Newton minimization with backtracking line
//! search on the incremental energy. Plastic strains live on SL(d) through the
//! local parametrizations of [`sl`], and all energies, dissipation potentials,
//! and driving forces are collected in [`constitutive`].

pub mod constitutive;
pub mod dual;
pub mod fem2d;
pub mod linalg;
pub mod meshgen;
pub mod point;
pub mod scalar;
pub mod sl;
pub mod sparse;

pub use constitutive::{MaterialParams, PointState};
pub use linalg::Mat;
