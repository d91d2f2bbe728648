use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::scene::Grid;
use crate::{Error, Result};

/// Transmitter and receiver positions plus the per-transmitter active
/// receiver mask (`mask[[p, q]]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub tx: Vec<[f64; 2]>,
    pub rx: Vec<[f64; 2]>,
    pub mask: Array2<bool>,
}

impl ArrayLayout {
    pub fn new(tx: Vec<[f64; 2]>, rx: Vec<[f64; 2]>, mask: Array2<bool>) -> Result<Self> {
        let layout = Self { tx, rx, mask };
        layout.validate()?;
        Ok(layout)
    }

    /// Full mask: every receiver active for every transmitter.
    pub fn full(tx: Vec<[f64; 2]>, rx: Vec<[f64; 2]>) -> Result<Self> {
        let mask = Array2::from_elem((tx.len(), rx.len()), true);
        Self::new(tx, rx, mask)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx.is_empty() || self.rx.is_empty() {
            return Err(Error::invalid("layout needs at least one transmitter and one receiver"));
        }
        if self.mask.dim() != (self.tx.len(), self.rx.len()) {
            return Err(Error::invalid(format!(
                "mask shape {:?} does not match {} transmitters x {} receivers",
                self.mask.dim(),
                self.tx.len(),
                self.rx.len()
            )));
        }
        for (p, row) in self.mask.rows().into_iter().enumerate() {
            if !row.iter().any(|&m| m) {
                return Err(Error::invalid(format!("transmitter {p} has no active receiver")));
            }
        }
        Ok(())
    }

    pub fn n_tx(&self) -> usize {
        self.tx.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx.len()
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Active receivers per transmitter.
    pub fn active_per_tx(&self) -> Vec<usize> {
        self.mask
            .rows()
            .into_iter()
            .map(|r| r.iter().filter(|&&m| m).count())
            .collect()
    }

    /// Checks that every antenna lies strictly outside the grid's square.
    pub fn check_outside(&self, grid: &Grid) -> Result<()> {
        for (name, set) in [("transmitter", &self.tx), ("receiver", &self.rx)] {
            for (i, p) in set.iter().enumerate() {
                if grid.contains(p[0], p[1]) {
                    return Err(Error::invalid(format!(
                        "{name} {i} at ({}, {}) lies inside the region of interest",
                        p[0], p[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn angular_distance_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Transmitters and receivers uniformly spaced on a circle, starting at angle
/// zero. A receiver is inactive for a transmitter when their angular distance
/// is below `exclusion_halfangle_deg`.
///
/// `(3.0, 12, 120, 30.0)` reproduces the 12 × 101 synthetic configuration:
/// 3° receiver steps with a 300° active arc per transmitter.
pub fn circular_layout(
    grid: &Grid,
    radius: f64,
    n_tx: usize,
    n_rx: usize,
    exclusion_halfangle_deg: f64,
) -> Result<ArrayLayout> {
    if n_tx == 0 || n_rx == 0 {
        return Err(Error::invalid("circular layout needs at least one transmitter and receiver"));
    }
    if !(radius > grid.half_width() * std::f64::consts::SQRT_2) {
        return Err(Error::invalid(format!(
            "array radius {radius} m does not enclose the region of interest (half-width {})",
            grid.half_width()
        )));
    }
    if !(0.0..180.0).contains(&exclusion_halfangle_deg) {
        return Err(Error::invalid(format!(
            "exclusion half-angle must be in [0, 180) degrees, got {exclusion_halfangle_deg}"
        )));
    }
    let tx_angles: Vec<f64> = (0..n_tx).map(|p| 360.0 * p as f64 / n_tx as f64).collect();
    let rx_angles: Vec<f64> = (0..n_rx).map(|q| 360.0 * q as f64 / n_rx as f64).collect();
    let on_circle = |deg: f64| {
        let t = deg.to_radians();
        [radius * t.cos(), radius * t.sin()]
    };
    let mask = Array2::from_shape_fn((n_tx, n_rx), |(p, q)| {
        angular_distance_deg(tx_angles[p], rx_angles[q]) >= exclusion_halfangle_deg - 1e-9
    });
    ArrayLayout::new(
        tx_angles.iter().map(|&a| on_circle(a)).collect(),
        rx_angles.iter().map(|&a| on_circle(a)).collect(),
        mask,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::build_grid;

    #[test]
    fn synthetic_configuration_is_12_by_101() {
        let grid = build_grid(0.5, 64).unwrap();
        let layout = circular_layout(&grid, 3.0, 12, 120, 30.0).unwrap();
        assert_eq!(layout.n_tx(), 12);
        assert!(layout.active_per_tx().iter().all(|&c| c == 101));
        layout.check_outside(&grid).unwrap();
    }

    #[test]
    fn fresnel_like_full_mask() {
        let grid = build_grid(0.1, 64).unwrap();
        let layout = circular_layout(&grid, 1.67, 18, 49, 0.0).unwrap();
        assert_eq!(layout.mask.dim(), (18, 49));
        assert_eq!(layout.active_count(), 18 * 49);
    }

    #[test]
    fn degenerate_exclusion_is_rejected() {
        let grid = build_grid(0.5, 16).unwrap();
        assert!(matches!(
            circular_layout(&grid, 3.0, 4, 8, 180.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn radius_inside_roi_is_rejected() {
        let grid = build_grid(0.5, 16).unwrap();
        assert!(circular_layout(&grid, 0.6, 4, 8, 0.0).is_err());
    }

    #[test]
    fn empty_mask_row_is_rejected() {
        let mut mask = Array2::from_elem((2, 2), true);
        mask[[1, 0]] = false;
        mask[[1, 1]] = false;
        let r = ArrayLayout::new(vec![[2.0, 0.0], [0.0, 2.0]], vec![[-2.0, 0.0], [0.0, -2.0]], mask);
        assert!(r.is_err());
    }
}
