//! Numerical laboratory for sparse domination of singular integral
//! operators by local mean oscillations.

pub mod error;
pub mod czo;
pub mod fft;
pub mod harness;
pub mod field;
pub mod lattice;
pub mod local_stats;
pub mod sobolev;
pub mod sparse;

pub use error::{Error, Result};
