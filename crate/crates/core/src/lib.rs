//! Cross-correlated physics-informed inversion of 2D TM scattering data.
//!
//! The medium (relative permittivity and conductivity) is represented by a
//! Fourier-feature, weight-normalized coordinate network. Per-frequency
//! contrast sources are optimized jointly with the network weights under a
//! loss made of a data residual, a state residual and a cross residual that
//! pushes the network's contrast through the full forward model to the
//! receivers.
//!
//! Module map:
//!
//! - [`scene`]: grids, phantoms, rasterization and complex contrast.
//! - [`physics`]: incident fields, Green's operators (dense and FFT), forward
//!   solver, Mie oracle and noise injection.
//! - [`neuralfield`]: the coordinate network and its hand-written backward pass.
//! - [`objective`]: the three residual terms, β schedules and the total loss.
//! - [`diffcore`]: joint gradients with respect to network weights and
//!   contrast sources.
//! - [`trainer`]: Adam, cosine learning rate, frequency strategies, PSNR,
//!   ensembles and inference.
//! - [`dataio`]: dataset container, Fresnel ingestion, result export.
//! - [`experiment`]: the configuration-driven commands used by the CLI.

pub mod dataio;
pub mod diffcore;
pub mod error;
pub mod experiment;
pub mod neuralfield;
pub mod objective;
pub mod physics;
pub mod scene;
pub mod special;
pub mod trainer;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.8541878128e-12;

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;

/// Free-space wavenumber for a frequency in Hz.
pub fn wavenumber(freq: f64) -> f64 {
    2.0 * std::f64::consts::PI * freq / C0
}
