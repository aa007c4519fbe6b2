//! Finite-element core for the quasi-static antiplane contact of a
//! thermo-electro-visco-elastic cylinder with slip-rate-dependent friction.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches files,
//! the environment or the command line lives in the `antiplane` crate.
//!
//! Layout:
//! - [`mesh`]: triangulated cross-sections with tagged boundary parts.
//! - [`spaces`]: P1 spaces `V`, `W`, `E`, discrete norms, trace constants.
//! - [`assembly`]: bilinear forms, load functionals, thermal operators.
//! - [`friction`]: friction bounds, the friction functional, regularization.
//! - [`vi_solver`]: the per-step quasi-variational inequality.
//! - [`stepper`]: time stepping of the coupled system.
//! - [`verify`]: oracles, manufactured solutions and stability studies.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod data;
mod error;
pub mod friction;
pub mod linalg;
pub mod math;
pub mod mesh;
pub mod spaces;
pub mod stepper;
pub mod verify;
pub mod vi_solver;

pub use error::{Error, Result};
