//! Cylindrical-harmonic series for a line source illuminating a homogeneous
//! circular cylinder centered at the origin.

use num_complex::Complex64;

use crate::{Error, Result};

/// Default truncation order `⌈k0 a⌉ + 15`.
pub fn mie_default_order(k0: f64, radius: f64) -> usize {
    (k0 * radius).ceil() as usize + 15
}

/// Scattered field at each receiver for the default truncation order.
///
/// `eps_c` is the complex relative permittivity `eps_r - j sigma/(omega eps0)`.
pub fn mie_cylinder_scattered(
    radius: f64,
    eps_c: Complex64,
    k0: f64,
    tx: [f64; 2],
    rx: &[[f64; 2]],
) -> Result<Vec<Complex64>> {
    mie_cylinder_scattered_with_order(radius, eps_c, k0, tx, rx, mie_default_order(k0, radius))
}

pub fn mie_cylinder_scattered_with_order(
    radius: f64,
    eps_c: Complex64,
    k0: f64,
    tx: [f64; 2],
    rx: &[[f64; 2]],
    max_order: usize,
) -> Result<Vec<Complex64>> {
    if !(radius > 0.0) || !(k0 > 0.0) {
        return Err(Error::invalid("cylinder radius and wavenumber must be positive"));
    }
    let rho_t = tx[0].hypot(tx[1]);
    if rho_t <= radius || rx.iter().any(|r| r[0].hypot(r[1]) <= radius) {
        return Err(Error::invalid("antennas must lie outside the cylinder"));
    }
    let phi_t = tx[1].atan2(tx[0]);

    // Exterior expansion coefficients a_n, n >= 0; a_{-n} = a_n.
    let k1 = k0 * eps_c.sqrt();
    let x0 = Complex64::new(k0 * radius, 0.0);
    let x1 = k1 * radius;
    let coeffs = (0..=max_order)
        .map(|n| {
            let nu = n as f64;
            let j0 = bessel_j(nu, x0)?;
            let j0p = bessel_j_prime(nu, x0)?;
            let h0 = hankel2(nu, x0)?;
            let h0p = hankel2_prime(nu, x0)?;
            let j1 = bessel_j(nu, x1)?;
            let j1p = bessel_j_prime(nu, x1)?;
            let num = j0 * k1 * j1p - k0 * j0p * j1;
            let den = k0 * h0p * j1 - k1 * j1p * h0;
            let a = num / den;
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::SeriesDivergence(format!("coefficient of order {n} is not finite")));
            }
            Ok(a)
        })
        .collect::<Result<Vec<_>>>()?;
    let h_tx = (0..=max_order)
        .map(|n| hankel2(n as f64, Complex64::new(k0 * rho_t, 0.0)))
        .collect::<Result<Vec<_>>>()?;

    rx.iter()
        .map(|r| {
            let rho = r[0].hypot(r[1]);
            let dphi = r[1].atan2(r[0]) - phi_t;
            let mut sum = Complex64::new(0.0, 0.0);
            for (n, (a, ht)) in coeffs.iter().zip(&h_tx).enumerate() {
                let hr = hankel2(n as f64, Complex64::new(k0 * rho, 0.0))?;
                let weight = if n == 0 { 1.0 } else { 2.0 * (n as f64 * dphi).cos() };
                sum += a * ht * hr * weight;
            }
            let v = Complex64::new(0.0, -0.25) * sum;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::SeriesDivergence("scattered field is not finite".into()));
            }
            Ok(v)
        })
        .collect()
}

fn lib_err(e: impl std::fmt::Debug) -> Error {
    Error::SeriesDivergence(format!("special function evaluation failed: {e:?}"))
}

fn bessel_j(nu: f64, z: Complex64) -> Result<Complex64> {
    complex_bessel::besselj(nu, z).map_err(lib_err)
}

fn bessel_j_prime(nu: f64, z: Complex64) -> Result<Complex64> {
    Ok((bessel_j(nu - 1.0, z)? - bessel_j(nu + 1.0, z)?) * 0.5)
}

fn hankel2(nu: f64, z: Complex64) -> Result<Complex64> {
    complex_bessel::hankel2(nu, z).map_err(lib_err)
}

fn hankel2_prime(nu: f64, z: Complex64) -> Result<Complex64> {
    Ok((hankel2(nu - 1.0, z)? - hankel2(nu + 1.0, z)?) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize, r: f64) -> Vec<[f64; 2]> {
        (0..n)
            .map(|q| {
                let t = 2.0 * std::f64::consts::PI * q as f64 / n as f64 + 0.1;
                [r * t.cos(), r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn vacuum_cylinder_does_not_scatter() {
        let k0 = crate::wavenumber(3e8);
        let out = mie_cylinder_scattered(0.1, Complex64::new(1.0, 0.0), k0, [3.0, 0.0], &ring(8, 3.0)).unwrap();
        assert!(out.iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn reciprocity_under_tx_rx_swap() {
        let k0 = crate::wavenumber(4e8);
        let eps = Complex64::new(3.0, -0.6);
        let a = [2.0, 1.0];
        let b = [-1.5, 2.2];
        let ab = mie_cylinder_scattered(0.2, eps, k0, a, &[b]).unwrap()[0];
        let ba = mie_cylinder_scattered(0.2, eps, k0, b, &[a]).unwrap()[0];
        assert!((ab - ba).norm() < 1e-13 * ab.norm());
    }

    #[test]
    fn series_is_converged_at_default_order() {
        let k0 = crate::wavenumber(3e8);
        let rx = ring(12, 3.0);
        for eps in [Complex64::new(2.0, 0.0), Complex64::new(6.0, -1.8)] {
            let base = mie_default_order(k0, 0.1);
            let a = mie_cylinder_scattered_with_order(0.1, eps, k0, [3.0, 0.0], &rx, base).unwrap();
            let b = mie_cylinder_scattered_with_order(0.1, eps, k0, [3.0, 0.0], &rx, base + 10).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-10 * y.norm());
            }
        }
    }

    #[test]
    fn antenna_inside_cylinder_is_rejected() {
        assert!(mie_cylinder_scattered(0.5, Complex64::new(2.0, 0.0), 6.0, [0.1, 0.0], &[[3.0, 0.0]]).is_err());
    }
}
