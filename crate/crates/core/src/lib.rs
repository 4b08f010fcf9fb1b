//! Robust selection from sampled QUBO solutions.
//!
//! Building blocks: a sparse QUBO model with exact enumeration, unit
//! commitment and EV charging encodings, scenario sets, classical samplers,
//! a statevector QAOA simulator, and the robust harvesting pipelines on top.

pub mod cli;
pub mod error;
pub mod ev;
pub mod qaoa;
pub mod qubo;
pub mod robust;
pub mod samplers;
pub mod scenario;
pub mod seed;
pub mod ucp;

pub use error::{Error, Result};
