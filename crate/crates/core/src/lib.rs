//! Green's-function simulator for write-write Raman scattering in an atomic
//! ensemble, with the spin-wave seed left by a first write pulse.
//!
//! The crate evaluates the analytic Stokes intensity for usual (vacuum
//! seeded) and enhanced (spin-wave seeded) Raman scattering, and checks it
//! against a direct integrator of the underlying propagation equations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod intensity;
pub mod io;
pub mod kernels;
pub mod oracle;
pub mod params;
pub mod quad;
pub mod specfun;
pub mod spinwave;

pub use error::{Error, Result};
