//! Simulation of a continuous-variable Ising machine built from coupled Kerr
//! parametric oscillators, annealed through their bifurcation under photon
//! loss, with a dephasing transverse-field qubit annealer as a baseline.
//!
//! Tensor products order modes with mode 0 as the slowest index. Rates are
//! in rad/μs and times in μs.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod fockspace;
pub mod harness;
pub mod integrate;
pub mod ising;
pub mod models;
pub mod semiclassical;
pub mod sparse;

pub use error::{Error, Result};
