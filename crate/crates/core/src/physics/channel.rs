use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    build_spectral_kernel, data_operator, domain_operator_dense, incident_fields, norm_sq, ArrayLayout,
    CMatrix, DomainOperator,
};
use crate::scene::Grid;
use crate::{wavenumber, Error, Result};

/// Everything the objective needs at one frequency.
///
/// `e_meas` is `P × Q` with inactive receivers stored as zero, so sums over
/// the full matrix equal sums over the mask. The two norms are fixed at
/// construction and never recomputed.
#[derive(Debug, Clone)]
pub struct FrequencyChannel {
    pub freq: f64,
    pub k0: f64,
    /// `P × N_g`.
    pub e_inc: CMatrix,
    /// `Q × N_g`.
    pub g_s: CMatrix,
    /// `G_S^T`, `N_g × Q`, so that predicted data is `J · g_s_t`.
    pub g_s_t: CMatrix,
    /// `conj(G_S)`, `Q × N_g`, for adjoint applies `R · conj(G_S)`.
    pub g_s_conj: CMatrix,
    pub domain: DomainOperator,
    pub e_meas: CMatrix,
    pub mask: Array2<bool>,
    meas_norm_sq: f64,
    inc_norm_sq: f64,
}

/// How `G_D` is represented inside a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainBackend {
    Dense,
    Spectral { pad_factor: usize },
}

impl Default for DomainBackend {
    fn default() -> Self {
        DomainBackend::Spectral { pad_factor: 4 }
    }
}

impl FrequencyChannel {
    /// Builds operators on `grid` for `layout` and attaches measured data.
    pub fn build(
        grid: &Grid,
        layout: &ArrayLayout,
        freq: f64,
        e_meas: &CMatrix,
        backend: DomainBackend,
    ) -> Result<Self> {
        layout.validate()?;
        if !(freq > 0.0) {
            return Err(Error::invalid(format!("frequency must be positive, got {freq}")));
        }
        if e_meas.dim() != (layout.n_tx(), layout.n_rx()) {
            return Err(Error::InvalidDataset(format!(
                "measured data shape {:?} does not match layout {}x{}",
                e_meas.dim(),
                layout.n_tx(),
                layout.n_rx()
            )));
        }
        let k0 = wavenumber(freq);
        let e_inc = incident_fields(layout, grid, k0)?;
        let g_s = data_operator(layout, grid, k0)?;
        let domain = match backend {
            DomainBackend::Dense => DomainOperator::Dense(domain_operator_dense(grid, k0)?),
            DomainBackend::Spectral { pad_factor } => {
                DomainOperator::Spectral(build_spectral_kernel(grid, k0, pad_factor)?)
            }
        };
        let mut meas = e_meas.clone();
        ndarray::Zip::from(&mut meas).and(&layout.mask).for_each(|v, &m| {
            if !m {
                *v = Complex64::new(0.0, 0.0);
            }
        });
        if meas.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidDataset("measured data contains non-finite values".into()));
        }
        let meas_norm_sq = norm_sq(meas.iter());
        if meas_norm_sq == 0.0 {
            return Err(Error::InvalidDataset(format!("measured field at {freq} Hz is identically zero")));
        }
        let inc_norm_sq = norm_sq(e_inc.iter());
        Ok(Self {
            freq,
            k0,
            g_s_t: g_s.t().to_owned(),
            g_s_conj: g_s.mapv(|c| c.conj()),
            g_s,
            e_inc,
            domain,
            e_meas: meas,
            mask: layout.mask.clone(),
            meas_norm_sq,
            inc_norm_sq,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.e_inc.nrows()
    }

    pub fn n_rx(&self) -> usize {
        self.g_s.nrows()
    }

    pub fn n_cells(&self) -> usize {
        self.e_inc.ncols()
    }

    /// `‖E_meas‖²_F` over active receivers.
    pub fn meas_norm_sq(&self) -> f64 {
        self.meas_norm_sq
    }

    /// `‖E_inc‖²_F`.
    pub fn inc_norm_sq(&self) -> f64 {
        self.inc_norm_sq
    }

    /// Predicted data `J G_S^T` with inactive receivers zeroed.
    pub fn predict(&self, sources: &CMatrix) -> Result<CMatrix> {
        if sources.dim() != (self.n_tx(), self.n_cells()) {
            return Err(Error::invalid(format!(
                "source shape {:?} does not match {}x{}",
                sources.dim(),
                self.n_tx(),
                self.n_cells()
            )));
        }
        let mut out = sources.dot(&self.g_s_t);
        self.apply_mask(&mut out);
        Ok(out)
    }

    pub fn apply_mask(&self, data: &mut CMatrix) {
        ndarray::Zip::from(data).and(&self.mask).for_each(|v, &m| {
            if !m {
                *v = Complex64::new(0.0, 0.0);
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::circular_layout;
    use crate::scene::build_grid;

    #[test]
    fn shapes_and_masking() {
        let grid = build_grid(0.5, 8).unwrap();
        let layout = circular_layout(&grid, 3.0, 4, 24, 30.0).unwrap();
        let meas = Array2::from_elem((4, 24), Complex64::new(1.0, 0.0));
        let ch = FrequencyChannel::build(&grid, &layout, 3e8, &meas, DomainBackend::Dense).unwrap();
        assert_eq!(ch.e_inc.dim(), (4, 64));
        assert_eq!(ch.g_s.dim(), (24, 64));
        assert_eq!(ch.meas_norm_sq(), layout.active_count() as f64);
        for ((p, q), v) in ch.e_meas.indexed_iter() {
            assert_eq!(v.re != 0.0, layout.mask[[p, q]]);
        }
    }

    #[test]
    fn zero_measurement_is_rejected() {
        let grid = build_grid(0.5, 4).unwrap();
        let layout = circular_layout(&grid, 3.0, 2, 8, 0.0).unwrap();
        let meas = Array2::zeros((2, 8));
        let err = FrequencyChannel::build(&grid, &layout, 3e8, &meas, DomainBackend::Dense).unwrap_err();
        assert!(matches!(err, Error::InvalidDataset(_)));
    }
}
