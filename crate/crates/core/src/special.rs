//! Real-argument Bessel and Hankel functions of orders 0 and 1.
//!
//! Below [`ASYMPTOTIC_THRESHOLD`] the `J_k` sequence comes from Miller's
//! backward recurrence normalized by `J_0 + 2 Σ J_2k = 1`, and `Y_0`, `Y_1`
//! from the Neumann series over that sequence. Above it the Hankel
//! asymptotic expansion is summed until its terms stop shrinking.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Arguments at or above this use the asymptotic expansion.
pub const ASYMPTOTIC_THRESHOLD: f64 = 25.0;

/// `J_0, J_1, Y_0, Y_1` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselPair {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl BesselPair {
    /// `H_0^(2) = J_0 - j Y_0`.
    pub fn hankel2_0(&self) -> Complex64 {
        Complex64::new(self.j0, -self.y0)
    }

    /// `H_1^(2) = J_1 - j Y_1`.
    pub fn hankel2_1(&self) -> Complex64 {
        Complex64::new(self.j1, -self.y1)
    }
}

/// Evaluates orders 0 and 1 of both kinds. `x` must be positive and finite.
pub fn bessel01(x: f64) -> BesselPair {
    debug_assert!(x > 0.0 && x.is_finite(), "bessel01 needs x > 0, got {x}");
    if x >= ASYMPTOTIC_THRESHOLD {
        asymptotic(x)
    } else {
        miller_neumann(x)
    }
}

pub fn bessel_j0(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    bessel01(x.abs()).j0
}

pub fn bessel_j1(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let v = bessel01(x.abs()).j1;
    if x < 0.0 {
        -v
    } else {
        v
    }
}

pub fn hankel2_0(x: f64) -> Complex64 {
    bessel01(x).hankel2_0()
}

pub fn hankel2_1(x: f64) -> Complex64 {
    bessel01(x).hankel2_1()
}

fn miller_neumann(x: f64) -> BesselPair {
    // Even starting order well past the turning point.
    let mut start = x.ceil() as usize + 40 + (6.0 * x.sqrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-30;
    let two_over_x = 2.0 / x;
    for k in (1..=start).rev() {
        j[k - 1] = k as f64 * two_over_x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for v in &mut j {
        *v /= norm;
    }

    let log_term = (x / 2.0).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 <= start {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = 2.0 / PI * log_term * j[0] - 4.0 / PI * s0;
    let y1 = -2.0 / PI * j[0] / x + 2.0 / PI * log_term * j[1] + 2.0 / PI * s1;
    BesselPair {
        j0: j[0],
        j1: j[1],
        y0,
        y1,
    }
}

fn asymptotic(x: f64) -> BesselPair {
    let h0 = hankel2_asymptotic(0.0, x);
    let h1 = hankel2_asymptotic(1.0, x);
    BesselPair {
        j0: h0.re,
        j1: h1.re,
        y0: -h0.im,
        y1: -h1.im,
    }
}

/// `H_nu^(2)(x) ~ sqrt(2/(pi x)) exp(-j w) Σ (-j)^k a_k(nu) / x^k`,
/// `w = x - nu pi/2 - pi/4`.
fn hankel2_asymptotic(nu: f64, x: f64) -> Complex64 {
    let mu = 4.0 * nu * nu;
    let minus_j = Complex64::new(0.0, -1.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut prev_mag = f64::INFINITY;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        let next = term * minus_j * ((mu - odd * odd) / (k as f64 * 8.0 * x));
        let mag = next.norm();
        if mag >= prev_mag || mag < 1e-18 * sum.norm() {
            if mag < prev_mag {
                sum += next;
            }
            break;
        }
        sum += next;
        term = next;
        prev_mag = mag;
    }
    let w = x - nu * PI / 2.0 - FRAC_PI_4;
    let phase = Complex64::new(w.cos(), -w.sin());
    (2.0 / (PI * x)).sqrt() * phase * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(order: f64, x: f64) -> (f64, f64) {
        let z = Complex64::new(x, 0.0);
        let j = complex_bessel::besselj(order, z).unwrap().re;
        let y = complex_bessel::bessely(order, z).unwrap().re;
        (j, y)
    }

    #[test]
    fn matches_library_across_ranges() {
        let mut xs: Vec<f64> = (1..400).map(|k| k as f64 * 0.137).collect();
        xs.extend([1e-6, 1e-3, 0.05, 24.999, 25.0, 25.001, 80.0, 312.7, 1500.0]);
        for x in xs {
            let b = bessel01(x);
            let (j0, y0) = reference(0.0, x);
            let (j1, y1) = reference(1.0, x);
            let scale = (2.0 / (PI * x)).sqrt().max(1.0 / x);
            for (got, want, name) in [(b.j0, j0, "J0"), (b.j1, j1, "J1"), (b.y0, y0, "Y0"), (b.y1, y1, "Y1")] {
                let tol = 1e-12 * want.abs().max(scale);
                assert!((got - want).abs() <= tol, "{name}({x}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn known_values() {
        // A&S table values.
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        let h = hankel2_0(3.0);
        assert!((h.re + 0.260_051_954_901_933_4).abs() < 1e-14);
        assert!((h.im + 0.376_850_010_012_790_4).abs() < 1e-14);
    }

    #[test]
    fn wronskian_identity() {
        for &x in &[0.01, 0.7, 3.3, 12.0, 24.9, 25.1, 60.0] {
            let b = bessel01(x);
            let w = b.j1 * b.y0 - b.j0 * b.y1;
            assert!((w - 2.0 / (PI * x)).abs() < 1e-13 * (2.0 / (PI * x)).max(1.0));
        }
    }

    #[test]
    fn odd_and_zero_arguments() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j1(0.0), 0.0);
        assert_eq!(bessel_j1(-2.0), -bessel_j1(2.0));
        assert_eq!(bessel_j0(-2.0), bessel_j0(2.0));
    }
}
