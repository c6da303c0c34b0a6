//! Ring-polymer molecular dynamics, branched non-equilibrium averaging and
//! open-system master equations.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod dnemd;
pub mod error;
pub mod estimators;
pub mod integrator;
pub mod master_eq;
pub mod normal_modes;
pub mod observables;
pub mod potentials;
pub mod rng;
pub mod stats;
pub mod thermal;
pub mod types;

pub use error::{Error, Result};
