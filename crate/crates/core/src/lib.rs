//! Surface-spline interpolation, smoothing and approximation on SO(3).

pub mod cli;
pub mod error;
pub mod fit;
pub mod kernels;
pub mod localize;
pub mod rotations;
pub mod wigner;

pub use error::{Error, Result};
