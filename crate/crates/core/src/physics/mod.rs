//! TM forward physics: array geometry, Green's operators, forward solver,
//! analytic cylinder oracle and measurement noise.
//!
//! Time convention is `e^{jωt}`; the 2D Green's function is
//! `G(r, r') = -(j/4) H_0^(2)(k0 |r - r'|)` and sources are unit-amplitude
//! line currents. Every operator entry is an equivalent-circle (pulse basis)
//! integral with `k0²` and the cell quadrature absorbed.

mod channel;
mod forward;
mod layout;
mod mie;
mod noise;
mod operators;

use ndarray::Array2;
use num_complex::Complex64;

pub use channel::{DomainBackend, FrequencyChannel};
pub use forward::{forward_solve, forward_solve_all, relative_state_residual, Solver};
pub use layout::{circular_layout, ArrayLayout};
pub use mie::{mie_cylinder_scattered, mie_cylinder_scattered_with_order, mie_default_order};
pub use noise::{add_noise, add_noise_masked};
pub use operators::{
    apply_domain_operator, build_spectral_kernel, data_operator, domain_operator_dense,
    green_offdiag_entry, green_self_entry, incident_fields, incident_fields_at, DomainOperator, SpectralKernel,
};

/// Complex matrix; rows are transmitters for field arrays.
pub type CMatrix = Array2<Complex64>;

/// Squared Frobenius norm.
pub fn norm_sq<'a>(values: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    values.into_iter().map(|c| c.norm_sqr()).sum()
}
