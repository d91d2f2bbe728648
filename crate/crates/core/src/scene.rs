//! Grids, phantoms and the frequency-dependent complex contrast.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, EPS0};

/// Uniform square discretization of `[-R, R]²`.
///
/// Cells are stored row-major with the x index first: cell `(i, j)` lives at
/// flat index `i * n + j` and has center `(x_i, y_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    n: usize,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid(format!(
                "grid half-width must be positive, got {half_width}"
            )));
        }
        if n < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 cells per side, got {n}")));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Cells per side.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        let d = self.spacing();
        d * d
    }

    /// Radius of the circle with the same area as one cell.
    pub fn equivalent_radius(&self) -> f64 {
        self.spacing() / PI.sqrt()
    }

    /// 1D cell-center coordinate for index `m`.
    pub fn center(&self, m: usize) -> f64 {
        -self.half_width + (m as f64 + 0.5) * self.spacing()
    }

    /// 1D cell-center coordinates along one axis.
    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.center(m)).collect()
    }

    /// Center of the cell with flat index `idx`.
    pub fn cell_center(&self, idx: usize) -> (f64, f64) {
        (self.center(idx / self.n), self.center(idx % self.n))
    }

    /// All cell centers in flat-index order.
    pub fn cell_centers(&self) -> Vec<(f64, f64)> {
        (0..self.len()).map(|idx| self.cell_center(idx)).collect()
    }

    /// Cell centers divided by the half-width, i.e. mapped into `[-1, 1]²`.
    pub fn normalized_centers(&self) -> Vec<[f64; 2]> {
        self.normalized_centers_by(self.half_width)
    }

    /// Cell centers divided by an arbitrary reference half-width.
    pub fn normalized_centers_by(&self, reference_half_width: f64) -> Vec<[f64; 2]> {
        self.cell_centers()
            .into_iter()
            .map(|(x, y)| [x / reference_half_width, y / reference_half_width])
            .collect()
    }

    /// Whether a point lies inside the closed square `[-R, R]²`.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x.abs() <= self.half_width && y.abs() <= self.half_width
    }
}

/// Convenience constructor mirroring [`Grid::new`].
pub fn build_grid(half_width: f64, n: usize) -> Result<Grid> {
    Grid::new(half_width, n)
}

/// Electrical parameters of a homogeneous region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub eps_r: f64,
    /// Conductivity in S/m.
    pub sigma: f64,
}

impl Material {
    pub const BACKGROUND: Material = Material {
        eps_r: 1.0,
        sigma: 0.0,
    };

    pub fn new(eps_r: f64, sigma: f64) -> Result<Self> {
        let m = Self { eps_r, sigma };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps_r >= 1.0) || !self.eps_r.is_finite() {
            return Err(Error::invalid(format!("eps_r must be >= 1, got {}", self.eps_r)));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        Ok(())
    }

    /// Complex relative permittivity `eps_r - j sigma / (omega eps0)`.
    pub fn complex_permittivity(&self, freq: f64) -> Complex64 {
        Complex64::new(self.eps_r, -self.sigma / (2.0 * PI * freq * EPS0))
    }
}

/// A single homogeneous shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Disk {
        center: [f64; 2],
        radius: f64,
        eps_r: f64,
        sigma: f64,
    },
    Annulus {
        center: [f64; 2],
        outer_radius: f64,
        inner_radius: f64,
        eps_r: f64,
        sigma: f64,
    },
}

impl Shape {
    pub fn disk(center: [f64; 2], radius: f64, material: Material) -> Self {
        Shape::Disk {
            center,
            radius,
            eps_r: material.eps_r,
            sigma: material.sigma,
        }
    }

    pub fn annulus(center: [f64; 2], outer_radius: f64, inner_radius: f64, material: Material) -> Self {
        Shape::Annulus {
            center,
            outer_radius,
            inner_radius,
            eps_r: material.eps_r,
            sigma: material.sigma,
        }
    }

    pub fn material(&self) -> Material {
        match *self {
            Shape::Disk { eps_r, sigma, .. } | Shape::Annulus { eps_r, sigma, .. } => {
                Material { eps_r, sigma }
            }
        }
    }

    pub fn center(&self) -> [f64; 2] {
        match *self {
            Shape::Disk { center, .. } | Shape::Annulus { center, .. } => center,
        }
    }

    /// Closed membership test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Disk { center, radius, .. } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Annulus {
                center,
                outer_radius,
                inner_radius,
                ..
            } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                let r2 = dx * dx + dy * dy;
                r2 <= outer_radius * outer_radius && r2 >= inner_radius * inner_radius
            }
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Annulus {
                outer_radius,
                inner_radius,
                ..
            } => PI * (outer_radius * outer_radius - inner_radius * inner_radius),
        }
    }

    /// Boundary circles as `(center, radius)` pairs.
    pub fn boundaries(&self) -> Vec<([f64; 2], f64)> {
        match *self {
            Shape::Disk { center, radius, .. } => vec![(center, radius)],
            Shape::Annulus {
                center,
                outer_radius,
                inner_radius,
                ..
            } => vec![(center, outer_radius), (center, inner_radius)],
        }
    }

    fn validate(&self) -> Result<()> {
        self.material().validate()?;
        match *self {
            Shape::Disk { radius, .. } if !(radius > 0.0) => {
                Err(Error::invalid(format!("disk radius must be positive, got {radius}")))
            }
            Shape::Annulus {
                outer_radius,
                inner_radius,
                ..
            } if !(outer_radius > inner_radius && inner_radius > 0.0) => Err(Error::invalid(format!(
                "annulus needs outer > inner > 0, got outer {outer_radius}, inner {inner_radius}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Ordered list of shapes on a vacuum background. Later shapes overwrite
/// earlier ones where they overlap.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub shapes: Vec<Shape>,
}

impl Phantom {
    pub fn new(shapes: Vec<Shape>) -> Result<Self> {
        let p = Self { shapes };
        p.validate()?;
        Ok(p)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        self.shapes.iter().try_for_each(Shape::validate)
    }

    /// Material at a point: the last shape that contains it, else background.
    pub fn material_at(&self, x: f64, y: f64) -> Material {
        self.shapes
            .iter()
            .rev()
            .find(|s| s.contains(x, y))
            .map(Shape::material)
            .unwrap_or(Material::BACKGROUND)
    }

    pub fn max_eps_r(&self) -> f64 {
        self.shapes
            .iter()
            .map(|s| s.material().eps_r)
            .fold(1.0, f64::max)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let phantom: Phantom = serde_json::from_str(&text)?;
        phantom.validate()?;
        Ok(phantom)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// The "Austria" benchmark: two disks of radius 0.1 m at (0.3, ±0.15) m and a
/// ring centered at (-0.1, 0) m with radii 0.3 m / 0.15 m.
pub fn austria_phantom(eps_r: f64, sigma: f64) -> Result<Phantom> {
    let m = Material::new(eps_r, sigma)?;
    austria_phantom_with(m, m)
}

/// Austria geometry with separate parameters for the two disks and the ring.
pub fn austria_phantom_with(disks: Material, ring: Material) -> Result<Phantom> {
    disks.validate()?;
    ring.validate()?;
    Phantom::new(vec![
        Shape::disk([0.3, -0.15], 0.1, disks),
        Shape::disk([0.3, 0.15], 0.1, disks),
        Shape::annulus([-0.1, 0.0], 0.3, 0.15, ring),
    ])
}

/// Relative permittivity and conductivity sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumMaps {
    pub n: usize,
    pub eps_r: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl MediumMaps {
    pub fn background(grid: &Grid) -> Self {
        Self {
            n: grid.n(),
            eps_r: vec![1.0; grid.len()],
            sigma: vec![0.0; grid.len()],
        }
    }
}

/// Samples the phantom at every cell center.
pub fn rasterize(phantom: &Phantom, grid: &Grid) -> MediumMaps {
    let (eps_r, sigma) = grid
        .cell_centers()
        .into_iter()
        .map(|(x, y)| {
            let m = phantom.material_at(x, y);
            (m.eps_r, m.sigma)
        })
        .unzip();
    MediumMaps {
        n: grid.n(),
        eps_r,
        sigma,
    }
}

/// Cell averages over an `s × s` lattice of sub-cell sample points.
///
/// Used to generate forward data: averaging the parameters over each cell
/// removes most of the staircase error of center sampling, so the forward
/// model converges smoothly with grid refinement.
pub fn rasterize_area_weighted(phantom: &Phantom, grid: &Grid, subsamples: usize) -> MediumMaps {
    let s = subsamples.max(1);
    let d = grid.spacing();
    let offsets: Vec<f64> = (0..s).map(|k| ((k as f64 + 0.5) / s as f64 - 0.5) * d).collect();
    let inv = 1.0 / (s * s) as f64;
    let (eps_r, sigma) = grid
        .cell_centers()
        .into_iter()
        .map(|(x, y)| {
            let (mut e, mut g) = (0.0, 0.0);
            for &ox in &offsets {
                for &oy in &offsets {
                    let m = phantom.material_at(x + ox, y + oy);
                    e += m.eps_r;
                    g += m.sigma;
                }
            }
            (e * inv, g * inv)
        })
        .unzip();
    MediumMaps {
        n: grid.n(),
        eps_r,
        sigma,
    }
}

/// Complex contrast at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMap {
    pub freq: f64,
    pub chi: Vec<Complex64>,
}

/// `chi = (eps_r - 1) - j sigma / (omega eps0)` for one cell.
#[inline]
pub fn contrast_value(eps_r: f64, sigma: f64, freq: f64) -> Complex64 {
    Complex64::new(eps_r - 1.0, -sigma / (2.0 * PI * freq * EPS0))
}

pub fn contrast_map(medium: &MediumMaps, freq: f64) -> Result<ContrastMap> {
    if !(freq > 0.0) {
        return Err(Error::invalid(format!("frequency must be positive, got {freq}")));
    }
    let chi = medium
        .eps_r
        .iter()
        .zip(&medium.sigma)
        .map(|(&e, &s)| contrast_value(e, s, freq))
        .collect();
    Ok(ContrastMap { freq, chi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_spacing_and_first_center() {
        let g = build_grid(0.5, 64).unwrap();
        assert_eq!(g.spacing(), 0.015625);
        assert_eq!(g.center(0), -0.4921875);

        let fresnel = build_grid(0.1, 64).unwrap();
        assert_relative_eq!(fresnel.spacing(), 0.003125, max_relative = 1e-15);

        let two = build_grid(0.5, 2).unwrap();
        assert_eq!(two.centers(), vec![-0.25, 0.25]);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(matches!(build_grid(0.0, 8), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_grid(-1.0, 8), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_grid(0.5, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn grid_centers_are_symmetric() {
        let g = build_grid(0.37, 9).unwrap();
        let c = g.centers();
        for m in 0..9 {
            assert_relative_eq!(c[m], -c[8 - m], epsilon = 1e-15);
        }
    }

    #[test]
    fn austria_geometry() {
        let p = austria_phantom(4.0, 0.0).unwrap();
        assert_eq!(p.shapes.len(), 3);
        assert_relative_eq!(p.shapes[2].area(), PI * (0.09 - 0.0225), max_relative = 1e-14);
        assert_eq!(p.shapes[0].center(), [0.3, -0.15]);
        assert_eq!(p.shapes[1].center(), [0.3, 0.15]);
        assert_eq!(p.shapes[2].center(), [-0.1, 0.0]);
    }

    #[test]
    fn austria_lossy_target_two() {
        let p = austria_phantom_with(Material::new(6.0, 0.05).unwrap(), Material::new(9.0, 0.03).unwrap())
            .unwrap();
        assert_eq!(p.shapes[0].material(), Material { eps_r: 6.0, sigma: 0.05 });
        assert_eq!(p.shapes[1].material(), Material { eps_r: 6.0, sigma: 0.05 });
        assert_eq!(p.shapes[2].material(), Material { eps_r: 9.0, sigma: 0.03 });
    }

    #[test]
    fn austria_rejects_unphysical_parameters() {
        assert!(austria_phantom(0.5, 0.0).is_err());
        assert!(austria_phantom(2.0, -0.1).is_err());
    }

    #[test]
    fn unit_permittivity_austria_is_background() {
        let grid = build_grid(0.5, 32).unwrap();
        let maps = rasterize(&austria_phantom(1.0, 0.0).unwrap(), &grid);
        let chi = contrast_map(&maps, 4e8).unwrap();
        assert!(chi.chi.iter().all(|c| *c == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn empty_phantom_rasterizes_to_background() {
        let grid = build_grid(0.5, 16).unwrap();
        let maps = rasterize(&Phantom::empty(), &grid);
        assert!(maps.eps_r.iter().all(|&e| e == 1.0));
        assert!(maps.sigma.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn disk_cell_count_matches_enumeration() {
        let grid = build_grid(0.5, 64).unwrap();
        let phantom = Phantom::new(vec![Shape::disk([0.0, 0.0], 0.1, Material::new(2.0, 0.0).unwrap())]).unwrap();
        let maps = rasterize(&phantom, &grid);
        let filled = maps.eps_r.iter().filter(|&&e| e == 2.0).count();

        // Independent enumeration over integer lattice offsets.
        let d = 1.0 / 64.0;
        let mut brute = 0;
        for i in 0..64 {
            for j in 0..64 {
                let x = -0.5 + (i as f64 + 0.5) * d;
                let y = -0.5 + (j as f64 + 0.5) * d;
                if x * x + y * y <= 0.01 {
                    brute += 1;
                }
            }
        }
        assert_eq!(filled, brute);
        let expected = PI * 0.01 / (d * d);
        assert!(((filled as f64) - expected).abs() <= 0.04 * expected);
    }

    #[test]
    fn annulus_hole_stays_empty() {
        let grid = build_grid(0.5, 64).unwrap();
        let ring = Shape::annulus([-0.1, 0.0], 0.3, 0.15, Material::new(3.0, 0.0).unwrap());
        let maps = rasterize(&Phantom::new(vec![ring]).unwrap(), &grid);
        for (idx, (x, y)) in grid.cell_centers().into_iter().enumerate() {
            let r = ((x + 0.1).powi(2) + y * y).sqrt();
            if r < 0.15 {
                assert_eq!(maps.eps_r[idx], 1.0);
            }
        }
    }

    #[test]
    fn later_shapes_overwrite_earlier() {
        let grid = build_grid(0.5, 32).unwrap();
        let a = Shape::disk([-0.05, 0.0], 0.2, Material::new(2.0, 0.01).unwrap());
        let b = Shape::disk([0.05, 0.0], 0.2, Material::new(5.0, 0.0).unwrap());
        let maps = rasterize(&Phantom::new(vec![a, b]).unwrap(), &grid);
        let mut both = 0;
        for (idx, (x, y)) in grid.cell_centers().into_iter().enumerate() {
            if a.contains(x, y) && b.contains(x, y) {
                both += 1;
                assert_eq!(maps.eps_r[idx], 5.0);
                assert_eq!(maps.sigma[idx], 0.0);
            }
        }
        assert!(both > 0);
    }

    #[test]
    fn area_weighted_rasterization_preserves_area() {
        let grid = build_grid(0.5, 64).unwrap();
        let phantom = Phantom::new(vec![Shape::disk([0.0, 0.0], 0.1, Material::new(2.0, 0.0).unwrap())]).unwrap();
        let maps = rasterize_area_weighted(&phantom, &grid, 16);
        let area: f64 = maps.eps_r.iter().map(|e| (e - 1.0) * grid.cell_area()).sum();
        assert_relative_eq!(area, PI * 0.01, max_relative = 5e-3);
    }

    #[test]
    fn contrast_examples() {
        let maps = MediumMaps {
            n: 2,
            eps_r: vec![1.0, 4.0, 6.0, 1.0],
            sigma: vec![0.0, 0.0, 0.03, 0.0],
        };
        let chi = contrast_map(&maps, 0.3e9).unwrap().chi;
        assert_eq!(chi[0], Complex64::new(0.0, 0.0));
        assert_eq!(chi[1], Complex64::new(3.0, 0.0));
        assert_eq!(chi[2].re, 5.0);
        // omega * eps0 = 2 pi 3e8 * 8.8541878128e-12 = 1.66897...e-2
        let omega_eps0 = 2.0 * 3.141592653589793 * 3.0e8 * 8.8541878128e-12;
        assert_relative_eq!(chi[2].im, -0.03 / omega_eps0, max_relative = 1e-14);
        assert!((chi[2].im + 1.7975).abs() < 1e-4);
    }

    #[test]
    fn contrast_rejects_nonpositive_frequency() {
        let maps = MediumMaps::background(&build_grid(0.5, 2).unwrap());
        assert!(contrast_map(&maps, 0.0).is_err());
        assert!(contrast_map(&maps, -1.0).is_err());
    }

    #[test]
    fn phantom_json_round_trip() {
        let p = austria_phantom_with(Material::new(6.0, 0.05).unwrap(), Material::new(9.0, 0.03).unwrap())
            .unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"kind\":\"annulus\""));
        let back: Phantom = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn contrast_frequency_scaling(eps in 1.0f64..20.0, sigma in 0.0f64..1.0, f1 in 1e8f64..1e10, f2 in 1e8f64..1e10) {
            let a = contrast_value(eps, sigma, f1);
            let b = contrast_value(eps, sigma, f2);
            prop_assert_eq!(a.re, b.re);
            prop_assert!((b.im - a.im * f1 / f2).abs() <= 1e-12 * a.im.abs().max(1e-300));
            prop_assert!(a.im <= 0.0);
        }
    }
}
