//! Numerics for Gaussian-divisible Hermitian Wigner matrices `W = X + sqrt(kappa) V`.
//!
//! Sampling, dense Hermitian spectra, the double-contour correlation kernel on
//! reference and steepest-descent contours, sine/Airy/Tracy-Widom Fredholm
//! determinants and the Monte Carlo harness that ties them together.

pub mod airy;
pub mod bulk_kernel;
pub mod checks;
pub mod edge_kernel;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod fredholm;
pub mod linalg;
pub mod quad;
pub mod rng;
pub mod spectral;
pub mod stats;

mod par;

pub use error::{Error, Result};
pub use num_complex::Complex64;
