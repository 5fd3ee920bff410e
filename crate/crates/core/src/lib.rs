//! Spectral fractional vector calculus and a fractional Maxwell scattering solver.

pub mod error;
pub mod helmholtz;
pub mod maxwell;
pub mod nonlocal;
pub mod solver;
pub mod spectral;

pub use error::{FracError, Result};
