//! Discrete causal structure and constructive Cauchy temporal functions on
//! sampled globally hyperbolic spacetimes.

pub mod error;
pub mod field;
pub mod geroch;
pub mod lorlin;
pub mod causal;
pub mod spacetime;
pub mod steep;
pub mod symmetry;
pub mod cli;

pub use error::{Error, Result};
