use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, ArrayView1, ArrayViewMut1};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{ArrayLayout, CMatrix};
use crate::scene::Grid;
use crate::special::{bessel01, bessel_j1, hankel2_0};
use crate::{Error, Result};

const MINUS_J: Complex64 = Complex64::new(0.0, -1.0);

/// Off-diagonal entry `k0² ∫_cell G(r, r') dr'` for a receiving point at
/// distance `dist` from a cell of equivalent radius `a`:
/// `-(jπ k0 a / 2) J_1(k0 a) H_0^(2)(k0 dist)`.
pub fn green_offdiag_entry(k0: f64, a: f64, dist: f64) -> Complex64 {
    offdiag_coefficient(k0, a) * hankel2_0(k0 * dist)
}

fn offdiag_coefficient(k0: f64, a: f64) -> Complex64 {
    MINUS_J * (PI * k0 * a / 2.0 * bessel_j1(k0 * a))
}

/// Self entry `-(jπ/2) k0 a H_1^(2)(k0 a) - 1`.
pub fn green_self_entry(k0: f64, a: f64) -> Complex64 {
    let h1 = bessel01(k0 * a).hankel2_1();
    MINUS_J * (PI / 2.0 * k0 * a) * h1 - 1.0
}

/// Kernel value for an integer cell displacement.
fn displacement_entry(k0: f64, a: f64, spacing: f64, coeff: Complex64, dx: i64, dy: i64) -> Complex64 {
    if dx == 0 && dy == 0 {
        green_self_entry(k0, a)
    } else {
        let dist = spacing * ((dx * dx + dy * dy) as f64).sqrt();
        coeff * hankel2_0(k0 * dist)
    }
}

fn check_k0(k0: f64) -> Result<()> {
    if !(k0 > 0.0) || !k0.is_finite() {
        return Err(Error::invalid(format!("wavenumber must be positive, got {k0}")));
    }
    Ok(())
}

/// Incident field of each transmitter at every cell center (`P × N_g`):
/// `-(j/4) H_0^(2)(k0 |r_n - r_p|)`.
pub fn incident_fields(layout: &ArrayLayout, grid: &Grid, k0: f64) -> Result<CMatrix> {
    check_k0(k0)?;
    let centers = grid.cell_centers();
    let tiny = 1e-9 * grid.spacing();
    let mut out = Array2::zeros((layout.n_tx(), grid.len()));
    for (p, t) in layout.tx.iter().enumerate() {
        for (n, &(x, y)) in centers.iter().enumerate() {
            let d = (x - t[0]).hypot(y - t[1]);
            if d <= tiny {
                return Err(Error::SingularGeometry(format!(
                    "transmitter {p} coincides with the center of cell {n}"
                )));
            }
            out[[p, n]] = Complex64::new(0.0, -0.25) * hankel2_0(k0 * d);
        }
    }
    Ok(out)
}

/// Incident field of each transmitter at each active receiver (`P × Q`);
/// inactive pairs are left at zero.
pub fn incident_fields_at(layout: &ArrayLayout, k0: f64) -> Result<CMatrix> {
    check_k0(k0)?;
    let mut out = Array2::zeros((layout.n_tx(), layout.n_rx()));
    for (p, t) in layout.tx.iter().enumerate() {
        for (q, r) in layout.rx.iter().enumerate() {
            if !layout.mask[[p, q]] {
                continue;
            }
            let d = (r[0] - t[0]).hypot(r[1] - t[1]);
            if d == 0.0 {
                return Err(Error::SingularGeometry(format!("transmitter {p} coincides with receiver {q}")));
            }
            out[[p, q]] = Complex64::new(0.0, -0.25) * hankel2_0(k0 * d);
        }
    }
    Ok(out)
}

/// Data operator `G_S` (`Q × N_g`) mapping contrast sources to receivers.
pub fn data_operator(layout: &ArrayLayout, grid: &Grid, k0: f64) -> Result<CMatrix> {
    check_k0(k0)?;
    for (q, r) in layout.rx.iter().enumerate() {
        if grid.contains(r[0], r[1]) {
            return Err(Error::invalid(format!("receiver {q} lies inside the region of interest")));
        }
    }
    let a = grid.equivalent_radius();
    let coeff = offdiag_coefficient(k0, a);
    let centers = grid.cell_centers();
    let mut out = Array2::zeros((layout.n_rx(), grid.len()));
    for (q, r) in layout.rx.iter().enumerate() {
        for (n, &(x, y)) in centers.iter().enumerate() {
            out[[q, n]] = coeff * hankel2_0(k0 * (x - r[0]).hypot(y - r[1]));
        }
    }
    Ok(out)
}

/// Dense domain operator `G_D` (`N_g × N_g`). Quadratic memory; meant for
/// small grids and as an oracle for the FFT path.
pub fn domain_operator_dense(grid: &Grid, k0: f64) -> Result<CMatrix> {
    check_k0(k0)?;
    let n = grid.n() as i64;
    let a = grid.equivalent_radius();
    let h = grid.spacing();
    let coeff = offdiag_coefficient(k0, a);
    // Entries depend only on the displacement; tabulate once.
    let side = (2 * n - 1) as usize;
    let mut table = vec![Complex64::new(0.0, 0.0); side * side];
    for dx in -(n - 1)..n {
        for dy in -(n - 1)..n {
            table[((dx + n - 1) as usize) * side + (dy + n - 1) as usize] =
                displacement_entry(k0, a, h, coeff, dx, dy);
        }
    }
    let ng = grid.len();
    let nu = grid.n();
    Ok(Array2::from_shape_fn((ng, ng), |(m, k)| {
        let dx = (m / nu) as i64 - (k / nu) as i64;
        let dy = (m % nu) as i64 - (k % nu) as i64;
        table[((dx + n - 1) as usize) * side + (dy + n - 1) as usize]
    }))
}

/// Circulant embedding of `G_D` for FFT application.
///
/// The kernel for displacement `(dx, dy)` sits at `(dx mod M, dy mod M)` in an
/// `M × M` array, `M = pad_factor · N`, and `spectrum` holds its 2D DFT stored
/// transposed (column-major) to match the transform order used in
/// [`SpectralKernel::apply_field`].
#[derive(Clone)]
pub struct SpectralKernel {
    grid: Grid,
    k0: f64,
    pad_factor: usize,
    padded: usize,
    spectrum_t: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralKernel")
            .field("n", &self.grid.n())
            .field("k0", &self.k0)
            .field("pad_factor", &self.pad_factor)
            .field("padded", &self.padded)
            .finish()
    }
}

pub fn build_spectral_kernel(grid: &Grid, k0: f64, pad_factor: usize) -> Result<SpectralKernel> {
    check_k0(k0)?;
    if pad_factor < 2 {
        return Err(Error::invalid(format!(
            "pad factor must be at least 2 for linear convolution, got {pad_factor}"
        )));
    }
    let n = grid.n() as i64;
    let m = pad_factor * grid.n();
    let mi = m as i64;
    let a = grid.equivalent_radius();
    let h = grid.spacing();
    let coeff = offdiag_coefficient(k0, a);

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(m);
    let inverse = planner.plan_fft_inverse(m);

    // Build the embedded kernel already transposed: buf[c * m + r] = g[r][c].
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
    for dx in -(n - 1)..n {
        for dy in -(n - 1)..n {
            let r = dx.rem_euclid(mi) as usize;
            let c = dy.rem_euclid(mi) as usize;
            buf[c * m + r] = displacement_entry(k0, a, h, coeff, dx, dy);
        }
    }
    // 2D DFT: transform contiguous chunks, transpose, transform again, transpose back.
    let mut scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len()];
    forward.process_with_scratch(&mut buf, &mut scratch);
    let mut t = transpose(&buf, m);
    forward.process_with_scratch(&mut t, &mut scratch);
    let spectrum_t = transpose(&t, m);

    Ok(SpectralKernel {
        grid: *grid,
        k0,
        pad_factor,
        padded: m,
        spectrum_t,
        forward,
        inverse,
    })
}

fn transpose(src: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); m * m];
    for r in 0..m {
        for c in 0..m {
            dst[c * m + r] = src[r * m + c];
        }
    }
    dst
}

impl SpectralKernel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn pad_factor(&self) -> usize {
        self.pad_factor
    }

    /// Padded side length `M = pad_factor · N`.
    pub fn padded_size(&self) -> usize {
        self.padded
    }

    /// Kernel spectrum at padded frequency index `(r, c)`.
    pub fn spectrum(&self, r: usize, c: usize) -> Complex64 {
        self.spectrum_t[c * self.padded + r]
    }

    /// `G_D x` for one field of length `N²` via zero-padded 2D FFTs.
    pub fn apply_field(&self, x: ArrayView1<Complex64>, mut out: ArrayViewMut1<Complex64>) {
        let n = self.grid.n();
        let m = self.padded;
        let zero = Complex64::new(0.0, 0.0);
        let mut scratch = vec![zero; self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len())];

        // Rows of the padded input; only the first n are non-zero.
        let mut rows = vec![zero; n * m];
        for i in 0..n {
            for j in 0..n {
                rows[i * m + j] = x[i * n + j];
            }
        }
        self.forward.process_with_scratch(&mut rows, &mut scratch);

        // Columns as contiguous chunks (cols[c * m + r]); rows past n stay zero.
        let mut cols = vec![zero; m * m];
        for i in 0..n {
            for c in 0..m {
                cols[c * m + i] = rows[i * m + c];
            }
        }
        self.forward.process_with_scratch(&mut cols, &mut scratch);
        for (v, g) in cols.iter_mut().zip(&self.spectrum_t) {
            *v *= g;
        }
        self.inverse.process_with_scratch(&mut cols, &mut scratch);

        // Only the first n rows survive truncation.
        for i in 0..n {
            for c in 0..m {
                rows[i * m + c] = cols[c * m + i];
            }
        }
        self.inverse.process_with_scratch(&mut rows, &mut scratch);
        let scale = 1.0 / (m * m) as f64;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = rows[i * m + j] * scale;
            }
        }
    }

    /// `G_D X` applied row-wise to a `P × N²` batch.
    pub fn apply(&self, fields: &CMatrix) -> Result<CMatrix> {
        self.check_shape(fields)?;
        let mut out = Array2::zeros(fields.raw_dim());
        for (x, y) in fields.rows().into_iter().zip(out.rows_mut()) {
            self.apply_field(x, y);
        }
        Ok(out)
    }

    fn check_shape(&self, fields: &CMatrix) -> Result<()> {
        if fields.ncols() != self.grid.len() {
            return Err(Error::invalid(format!(
                "field length {} does not match the kernel grid ({} cells)",
                fields.ncols(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        domain_operator_dense(&self.grid, self.k0)
    }
}

/// Either representation of `G_D`.
#[derive(Debug, Clone)]
pub enum DomainOperator {
    Dense(CMatrix),
    Spectral(SpectralKernel),
}

impl DomainOperator {
    pub fn n_cells(&self) -> usize {
        match self {
            DomainOperator::Dense(m) => m.nrows(),
            DomainOperator::Spectral(k) => k.grid.len(),
        }
    }

    /// `G_D X` for each row of `fields`.
    pub fn apply(&self, fields: &CMatrix) -> Result<CMatrix> {
        match self {
            DomainOperator::Dense(g) => {
                if fields.ncols() != g.ncols() {
                    return Err(Error::invalid(format!(
                        "field length {} does not match operator size {}",
                        fields.ncols(),
                        g.ncols()
                    )));
                }
                Ok(fields.dot(&g.t()))
            }
            DomainOperator::Spectral(k) => k.apply(fields),
        }
    }

    /// `G_D^H X` for each row. `G_D` is complex symmetric, so the adjoint is
    /// `conj(G_D conj(X))`.
    pub fn apply_adjoint(&self, fields: &CMatrix) -> Result<CMatrix> {
        let conj = fields.mapv(|c| c.conj());
        let mut out = self.apply(&conj)?;
        out.mapv_inplace(|c| c.conj());
        Ok(out)
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let m = Array2::from_shape_vec((1, x.len()), x.to_vec())
            .map_err(|e| Error::invalid(e.to_string()))?;
        Ok(self.apply(&m)?.into_raw_vec_and_offset().0)
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        match self {
            DomainOperator::Dense(g) => Ok(g.clone()),
            DomainOperator::Spectral(k) => k.to_dense(),
        }
    }
}

/// Free-function form of [`SpectralKernel::apply`].
pub fn apply_domain_operator(fields: &CMatrix, kernel: &SpectralKernel) -> Result<CMatrix> {
    kernel.apply(fields)
}
