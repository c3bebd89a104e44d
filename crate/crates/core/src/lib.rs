//! Hamiltonian engineering for flux-driven superconducting circuits.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cooling;
pub mod device;
pub mod drive;
pub mod dynamics;
pub mod error;
pub mod multilevel;
pub mod operator;
pub mod readout;
pub mod rwa;
pub mod selfcheck;
pub mod timedep;

pub use error::{Error, Result};
pub use operator::{C64, Matrix, Operator, Pauli, PauliTable};
pub use timedep::TimeDependent;
