//! Orthogonal polynomial projection of noisy sampled signals and
//! higher-order-statistics checks on the resulting approximation error.
//!
//! - [`ortho_poly`]: discrete orthogonal polynomial bases, the projection
//!   `H = P Q⁻¹ Pᵀ`, and minimum error-variance order selection.
//! - [`signal_noise`]: damped-exponential transients and unit-variance noise
//!   from Gaussian, Laplacian, uniform, and gamma laws.
//! - [`gaussianity`]: bispectrum, bicoherence, the Hinich chi-squared test,
//!   average excess kurtosis, and histograms.
//! - [`experiment`]: the seeded Monte Carlo harness and its report files.
//! - [`cli`] and [`formats`]: command-line front end and CSV formats.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod gaussianity;
pub mod ortho_poly;
pub mod sequence;
pub mod signal_noise;

pub use error::{Error, Result};
pub use sequence::Sequence;
