//! Leonard pairs and tridiagonal pairs built from a chain of spin-1/2 factors.

pub mod blocktri;
pub mod cli;
pub mod construct;
pub mod error;
pub mod export;
pub mod matrix;
pub mod overlaps;
pub mod params;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, C64};
pub use params::{GenericityTolerances, ModelParams};
