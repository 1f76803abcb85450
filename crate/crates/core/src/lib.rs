//! Finite element core for steady aqueous-humor flow coupled with conjugate
//! heat transfer in a multi-region eye cross-section.
//!
//! The crate is `no_std` (with `alloc`). Enable the `std` feature for
//! `std::error::Error` integration and `parallel` for rayon-backed element
//! loops. File formats, configuration and the command-line driver live in the
//! companion `eyeflow` crate.
//!
//! Module map:
//!
//! * [`mesh`]: tagged simplex meshes, validation and the parametric eye
//!   cross-section generator.
//! * [`femspace`]: quadrature, Lagrange reference elements and dof maps.
//! * [`assembly`]: element-loop assembly of the weak forms.
//! * [`linsolve`]: CSR storage, (F)GMRES, ILU(0), the fluid/heat block
//!   preconditioner and a dense fallback.
//! * [`coupled`]: the monolithic Navier-Stokes/Boussinesq/heat residual, its
//!   exact Jacobian and the Newton driver.
//! * [`postproc`]: derived metrics, stream function and probes.
//! * [`verification`]: manufactured solutions, the buoyant cavity benchmark
//!   and hydrostatic checks.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod assembly;
pub mod coupled;
mod error;
pub mod femspace;
pub mod linsolve;
pub(crate) mod math;
pub mod mesh;
pub(crate) mod par;
pub mod postproc;
#[cfg(test)]
mod testutil;
pub mod verification;

pub use error::{Error, Result};
