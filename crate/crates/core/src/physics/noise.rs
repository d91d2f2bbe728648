use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::CMatrix;
use crate::{Error, Result};

/// Adds complex white Gaussian noise at the given SNR (dB), referenced to the
/// trace's own power:
/// `y' = y + sqrt(‖y‖² / (N 10^(snr/10))) (n_re + j n_im) / √2`.
///
/// `snr_db = +∞` returns `y` unchanged and draws nothing from `rng`.
pub fn add_noise<R: Rng + ?Sized>(y: &[Complex64], snr_db: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    if y.is_empty() {
        return Err(Error::invalid("cannot add noise to an empty trace"));
    }
    if snr_db == f64::INFINITY {
        return Ok(y.to_vec());
    }
    if snr_db.is_nan() {
        return Err(Error::invalid("SNR must not be NaN"));
    }
    let power: f64 = y.iter().map(|c| c.norm_sqr()).sum();
    if power == 0.0 {
        return Err(Error::invalid("noise referenced to a zero trace is undefined"));
    }
    let amp = (power / (y.len() as f64 * 10f64.powf(snr_db / 10.0))).sqrt() / std::f64::consts::SQRT_2;
    Ok(y.iter()
        .map(|c| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c + Complex64::new(re, im) * amp
        })
        .collect())
}

/// Applies [`add_noise`] to each transmitter row over its active receivers
/// only; inactive entries are left untouched.
pub fn add_noise_masked<R: Rng + ?Sized>(
    data: &CMatrix,
    mask: &Array2<bool>,
    snr_db: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    if data.dim() != mask.dim() {
        return Err(Error::invalid("data and mask shapes differ"));
    }
    let mut out = data.clone();
    for p in 0..data.nrows() {
        let active: Vec<usize> = (0..data.ncols()).filter(|&q| mask[[p, q]]).collect();
        let trace: Vec<Complex64> = active.iter().map(|&q| data[[p, q]]).collect();
        let noisy = add_noise(&trace, snr_db, rng)?;
        for (&q, v) in active.iter().zip(noisy) {
            out[[p, q]] = v;
        }
    }
    Ok(out)
}
