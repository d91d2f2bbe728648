//! Data, state and cross residuals with fixed denominators, the β schedules,
//! and the multi-frequency total.
//!
//! Every norm is a Frobenius norm over the whole `P × ·` matrix. Inactive
//! receivers are zero in both `E_meas` and the predictions, so they drop out
//! of numerators and denominators alike.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::physics::{norm_sq, CMatrix, FrequencyChannel};
use crate::scene::contrast_value;
use crate::{Error, Result};

/// The three terms for one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrequencyTerms {
    pub l_data: f64,
    pub l_state: f64,
    pub l_cross: f64,
}

/// Intermediate matrices shared by the loss value and its adjoint.
#[derive(Debug, Clone)]
pub struct Residuals {
    /// `J G_S^T - E_meas` (masked).
    pub data: CMatrix,
    /// `χ ⊙ E - J`.
    pub state: CMatrix,
    /// `(χ ⊙ E) G_S^T - E_meas` (masked).
    pub cross: CMatrix,
    /// `E = E_inc + G_D J`.
    pub total_field: CMatrix,
}

fn check_shapes(chi: &[Complex64], sources: &CMatrix, ch: &FrequencyChannel) -> Result<()> {
    if sources.dim() != ch.e_inc.dim() {
        return Err(Error::invalid(format!(
            "contrast source shape {:?} does not match {:?}",
            sources.dim(),
            ch.e_inc.dim()
        )));
    }
    if chi.len() != ch.n_cells() {
        return Err(Error::invalid(format!(
            "contrast has {} cells, channel has {}",
            chi.len(),
            ch.n_cells()
        )));
    }
    Ok(())
}

/// `χ ⊙ rows` with `χ` broadcast over transmitters.
fn scale_rows(chi: &[Complex64], rows: &CMatrix) -> CMatrix {
    let mut out = rows.clone();
    for mut row in out.rows_mut() {
        row.iter_mut().zip(chi).for_each(|(v, c)| *v *= c);
    }
    out
}

/// All residuals with one `G_D J` evaluation.
pub fn residuals(chi: &[Complex64], sources: &CMatrix, ch: &FrequencyChannel) -> Result<Residuals> {
    check_shapes(chi, sources, ch)?;
    let data = ch.predict(sources)? - &ch.e_meas;
    let total_field = &ch.e_inc + &ch.domain.apply(sources)?;
    let induced = scale_rows(chi, &total_field);
    let state = &induced - sources;
    let cross = ch.predict(&induced)? - &ch.e_meas;
    Ok(Residuals {
        data,
        state,
        cross,
        total_field,
    })
}

impl Residuals {
    pub fn terms(&self, ch: &FrequencyChannel) -> FrequencyTerms {
        FrequencyTerms {
            l_data: norm_sq(self.data.iter()) / ch.meas_norm_sq(),
            l_state: norm_sq(self.state.iter()) / ch.inc_norm_sq(),
            l_cross: norm_sq(self.cross.iter()) / ch.meas_norm_sq(),
        }
    }
}

/// `‖G_S J - E_meas‖² / ‖E_meas‖²`.
pub fn loss_data(sources: &CMatrix, ch: &FrequencyChannel) -> Result<f64> {
    let r = ch.predict(sources)? - &ch.e_meas;
    Ok(norm_sq(r.iter()) / ch.meas_norm_sq())
}

/// `‖χ ⊙ (E_inc + G_D J) - J‖² / ‖E_inc‖²`.
pub fn loss_state(chi: &[Complex64], sources: &CMatrix, ch: &FrequencyChannel) -> Result<f64> {
    check_shapes(chi, sources, ch)?;
    let total = &ch.e_inc + &ch.domain.apply(sources)?;
    let r = scale_rows(chi, &total) - sources;
    Ok(norm_sq(r.iter()) / ch.inc_norm_sq())
}

/// `‖G_S(χ ⊙ (E_inc + G_D J)) - E_meas‖² / ‖E_meas‖²`.
pub fn loss_cross(chi: &[Complex64], sources: &CMatrix, ch: &FrequencyChannel) -> Result<f64> {
    check_shapes(chi, sources, ch)?;
    let total = &ch.e_inc + &ch.domain.apply(sources)?;
    let r = ch.predict(&scale_rows(chi, &total))? - &ch.e_meas;
    Ok(norm_sq(r.iter()) / ch.meas_norm_sq())
}

/// `exp(-10 epoch / total)`.
pub fn beta(epoch: usize, total_epochs: usize) -> Result<f64> {
    if total_epochs == 0 {
        return Err(Error::invalid("β schedule needs a positive epoch count"));
    }
    if epoch > total_epochs {
        return Err(Error::invalid(format!("epoch {epoch} exceeds schedule length {total_epochs}")));
    }
    Ok((-10.0 * epoch as f64 / total_epochs as f64).exp())
}

/// Stage-reset β: the epoch counter restarts at every stage start.
///
/// `stage_starts` are the first epochs of each stage, ascending from 0;
/// the last stage ends at `total_epochs`.
pub fn staged_beta(epoch: usize, stage_starts: &[usize], total_epochs: usize) -> Result<f64> {
    let (start, len) = stage_window(epoch, stage_starts, total_epochs)?;
    beta(epoch - start, len)
}

/// `(start, length)` of the stage containing `epoch`.
pub fn stage_window(epoch: usize, stage_starts: &[usize], total_epochs: usize) -> Result<(usize, usize)> {
    if stage_starts.first() != Some(&0) || stage_starts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!("stage starts must ascend from 0, got {stage_starts:?}")));
    }
    if epoch > total_epochs || *stage_starts.last().unwrap() >= total_epochs.max(1) {
        return Err(Error::invalid("stage layout does not fit the run"));
    }
    let s = stage_starts.partition_point(|&b| b <= epoch) - 1;
    let end = stage_starts.get(s + 1).copied().unwrap_or(total_epochs);
    Ok((stage_starts[s], end - stage_starts[s]))
}

/// Per-frequency terms, β and the weighted sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    /// `(channel index, terms)` in ascending channel order.
    pub per_frequency: Vec<(usize, FrequencyTerms)>,
    pub beta: f64,
    pub total: f64,
}

/// Contrast at each cell from network outputs at one frequency.
pub fn contrast_from_medium(eps_r: &[f64], sigma: &[f64], freq: f64) -> Vec<Complex64> {
    eps_r.iter().zip(sigma).map(|(&e, &s)| contrast_value(e, s, freq)).collect()
}

/// `Σ_i (l_data + l_state + β l_cross)` over `active` channels.
///
/// `sources[i]` must be present for every active `i`.
pub fn total_loss(
    eps_r: &[f64],
    sigma: &[f64],
    channels: &[FrequencyChannel],
    sources: &[Option<CMatrix>],
    active: &[usize],
    beta: f64,
) -> Result<LossTerms> {
    Ok(evaluate(eps_r, sigma, channels, sources, active, beta)?.0)
}

/// [`total_loss`] plus the residuals of each active channel.
pub fn evaluate(
    eps_r: &[f64],
    sigma: &[f64],
    channels: &[FrequencyChannel],
    sources: &[Option<CMatrix>],
    active: &[usize],
    beta: f64,
) -> Result<(LossTerms, Vec<Residuals>)> {
    if active.is_empty() {
        return Err(Error::invalid("no active frequency"));
    }
    if active.windows(2).any(|w| w[0] >= w[1]) || active.iter().any(|&i| i >= channels.len()) {
        return Err(Error::invalid(format!("invalid active set {active:?}")));
    }
    let mut per_frequency = Vec::with_capacity(active.len());
    let mut all = Vec::with_capacity(active.len());
    let mut total = 0.0;
    for &i in active {
        let ch = &channels[i];
        let j = sources
            .get(i)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::invalid(format!("channel {i} is active but has no contrast source")))?;
        let chi = contrast_from_medium(eps_r, sigma, ch.freq);
        let res = residuals(&chi, j, ch)?;
        let t = res.terms(ch);
        for (name, v) in [("l_data", t.l_data), ("l_state", t.l_state), ("l_cross", t.l_cross)] {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    term: format!("{name} at {} Hz", ch.freq),
                });
            }
        }
        total += t.l_data + t.l_state + beta * t.l_cross;
        per_frequency.push((i, t));
        all.push(res);
    }
    Ok((
        LossTerms {
            per_frequency,
            beta,
            total,
        },
        all,
    ))
}

/// Zero matrix shaped like a channel's contrast source.
pub fn zero_sources(ch: &FrequencyChannel) -> CMatrix {
    Array2::zeros(ch.e_inc.raw_dim())
}
