//! Numerical toolkit for free and perturbed Dirac operators in two and three
//! dimensions.
//!
//! The crate builds the Clifford family `alpha_1..alpha_n, beta`, evaluates
//! the outgoing and incoming resolvent kernels in closed form, discretizes
//! them on uniform grids, and measures the quantities that enter limiting
//! absorption, threshold regularity, high-energy product and Strichartz /
//! Kato smoothing estimates.
//!
//! Large translation-invariant operators are stored as block-Toeplitz
//! convolutions and applied with FFTs; everything else is dense.

pub mod clifford;
pub mod cli;
pub mod error;
pub mod fields;
pub mod highenergy;
pub mod kernels;
pub mod lap;
pub mod linalg;
pub mod propagator;
pub mod special;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
