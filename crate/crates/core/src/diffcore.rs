//! Joint gradients of the loss with respect to network parameters and
//! contrast sources, by hand-derived adjoints.
//!
//! Complex convention: for a real loss `L` and complex variable `z = a + jb`
//! the returned gradient is `∂L/∂a + j ∂L/∂b` (so `∇‖J‖² = 2J`). Adam treats
//! the real and imaginary parts as independent scalars under this
//! convention.
//!
//! With `w = χ ⊙ E`, `E = E_inc + G_D J` and the residuals of
//! [`crate::objective::Residuals`], for one frequency:
//!
//! ```text
//! s     = r_cross · conj(G_S)
//! u     = (c_s / ‖E_inc‖²) r_state + (c_c / ‖E_meas‖²) s
//! ∇_J   = 2 (c_d / ‖E_meas‖²) r_data · conj(G_S) - 2 (c_s / ‖E_inc‖²) r_state + 2 G_D^H(conj(χ) ⊙ u)
//! ∇_χ   = 2 Σ_p conj(E_p) ⊙ u_p
//! ```
//!
//! where `c_d, c_s, c_c` are the term weights (`1, 1, β` for the total).
//! `∇_χ` is pushed to `eps_r` and `sigma` through `χ = (eps_r - 1) - jσ/(ωε0)`
//! and then through the network.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::neuralfield::{backward, forward_features, NetworkParams};
use crate::objective::{contrast_from_medium, residuals, FrequencyTerms, LossTerms};
use crate::physics::{CMatrix, FrequencyChannel};
use crate::{Error, Result, EPS0};

/// Multipliers for the three terms of one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeights {
    pub data: f64,
    pub state: f64,
    pub cross: f64,
}

impl TermWeights {
    /// `(1, 1, β)`.
    pub fn total(beta: f64) -> Self {
        Self {
            data: 1.0,
            state: 1.0,
            cross: beta,
        }
    }

    pub fn only_data() -> Self {
        Self {
            data: 1.0,
            state: 0.0,
            cross: 0.0,
        }
    }

    pub fn only_state() -> Self {
        Self {
            data: 0.0,
            state: 1.0,
            cross: 0.0,
        }
    }

    pub fn only_cross() -> Self {
        Self {
            data: 0.0,
            state: 0.0,
            cross: 1.0,
        }
    }

    fn combine(&self, t: &FrequencyTerms) -> f64 {
        self.data * t.l_data + self.state * t.l_state + self.cross * t.l_cross
    }
}

/// Gradients mirroring the differentiated variables.
#[derive(Debug, Clone)]
pub struct GradientBundle {
    pub d_theta: NetworkParams,
    /// One entry per channel; `None` where the channel is inactive.
    pub d_j: Vec<Option<CMatrix>>,
}

/// Fixed inputs of one loss evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LossSpec<'a> {
    pub channels: &'a [FrequencyChannel],
    /// Fourier features of the training coordinates, one row per cell.
    pub features: &'a Array2<f64>,
    /// Active channel indices, ascending.
    pub active: &'a [usize],
    pub weights: TermWeights,
}

/// Loss value, its terms, and the exact gradient.
pub fn gradient(
    spec: &LossSpec<'_>,
    params: &NetworkParams,
    sources: &[Option<CMatrix>],
) -> Result<(f64, LossTerms, GradientBundle)> {
    if spec.active.is_empty() {
        return Err(Error::invalid("no active frequency"));
    }
    let tape = forward_features(spec.features, params);
    let eps = tape.eps_r.as_slice().expect("contiguous");
    let sigma = tape.sigma.as_slice().expect("contiguous");
    let n_cells = eps.len();

    let mut d_eps = Array1::<f64>::zeros(n_cells);
    let mut d_sigma = Array1::<f64>::zeros(n_cells);
    let mut d_j: Vec<Option<CMatrix>> = vec![None; spec.channels.len()];
    let mut per_frequency = Vec::with_capacity(spec.active.len());
    let mut value = 0.0;

    for &i in spec.active {
        let ch = spec
            .channels
            .get(i)
            .ok_or_else(|| Error::invalid(format!("active channel {i} does not exist")))?;
        let j = sources
            .get(i)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::invalid(format!("channel {i} is active but has no contrast source")))?;
        let chi = contrast_from_medium(eps, sigma, ch.freq);
        let res = residuals(&chi, j, ch)?;
        let terms = res.terms(ch);
        for (name, v) in [("l_data", terms.l_data), ("l_state", terms.l_state), ("l_cross", terms.l_cross)] {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    term: format!("{name} at {} Hz", ch.freq),
                });
            }
        }
        value += spec.weights.combine(&terms);
        per_frequency.push((i, terms));

        let w_d = spec.weights.data / ch.meas_norm_sq();
        let w_s = spec.weights.state / ch.inc_norm_sq();
        let w_c = spec.weights.cross / ch.meas_norm_sq();

        // u = w_s r_state + w_c r_cross conj(G_S)
        let mut u = res.state.mapv(|v| v * w_s);
        if w_c != 0.0 {
            u.scaled_add(Complex64::new(w_c, 0.0), &res.cross.dot(&ch.g_s_conj));
        }

        // ∇_J
        let mut conj_chi_u = u.clone();
        for mut row in conj_chi_u.rows_mut() {
            row.iter_mut().zip(&chi).for_each(|(v, c)| *v *= c.conj());
        }
        let mut gj = ch.domain.apply_adjoint(&conj_chi_u)?;
        gj.scaled_add(Complex64::new(-w_s, 0.0), &res.state);
        if w_d != 0.0 {
            gj.scaled_add(Complex64::new(w_d, 0.0), &res.data.dot(&ch.g_s_conj));
        }
        gj.mapv_inplace(|v| v * 2.0);
        d_j[i] = Some(gj);

        // ∇_χ, then chain to (eps_r, sigma).
        let omega_eps0 = 2.0 * std::f64::consts::PI * ch.freq * EPS0;
        for n in 0..n_cells {
            let mut g = Complex64::new(0.0, 0.0);
            for p in 0..u.nrows() {
                g += res.total_field[[p, n]].conj() * u[[p, n]];
            }
            g *= 2.0;
            d_eps[n] += g.re;
            d_sigma[n] -= g.im / omega_eps0;
        }
    }

    if !value.is_finite() {
        return Err(Error::NonFinite { term: "total".into() });
    }
    let d_theta = backward(&tape, params, &d_eps, &d_sigma);
    if !d_theta.all_finite() {
        return Err(Error::NonFinite {
            term: "network gradient".into(),
        });
    }
    let beta = spec.weights.cross;
    Ok((
        value,
        LossTerms {
            per_frequency,
            beta,
            total: value,
        },
        GradientBundle { d_theta, d_j },
    ))
}
