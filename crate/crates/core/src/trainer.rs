//! Joint Adam optimization of the network and the contrast sources.

use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffcore::{gradient, LossSpec, TermWeights};
use crate::neuralfield::{
    forward_features, init_params, Checkpoint, FourierEmbedding, NetworkParams, DEFAULT_DIMS, DEFAULT_FEATURE_STD,
};
use crate::objective::{beta, stage_window, FrequencyTerms};
use crate::physics::{norm_sq, CMatrix, FrequencyChannel};
use crate::scene::{Grid, MediumMaps};
use crate::{Error, Result};

/// Adam with bias correction; one moment pair per scalar.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    fn begin(&mut self, n: usize, grads_finite: bool) -> Result<(f64, f64)> {
        if n != self.m.len() {
            return Err(Error::invalid(format!(
                "optimizer sized for {} values, got {n}",
                self.m.len()
            )));
        }
        if !grads_finite {
            return Err(Error::NonFinite {
                term: "gradient passed to Adam".into(),
            });
        }
        self.t += 1;
        let t = self.t as i32;
        Ok((1.0 - self.beta1.powi(t), 1.0 - self.beta2.powi(t)))
    }

    #[inline]
    fn delta(&mut self, k: usize, g: f64, lr: f64, c1: f64, c2: f64) -> f64 {
        self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
        self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
        let m_hat = self.m[k] / c1;
        let v_hat = self.v[k] / c2;
        lr * m_hat / (v_hat.sqrt() + self.eps)
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::invalid("parameter and gradient lengths differ"));
        }
        let (c1, c2) = self.begin(grads.len(), grads.iter().all(|g| g.is_finite()))?;
        for (k, (p, &g)) in params.iter_mut().zip(grads).enumerate() {
            *p -= self.delta(k, g, lr, c1, c2);
        }
        Ok(())
    }

    /// Real and imaginary parts as two independent scalars; sized `2n`.
    pub fn step_complex(&mut self, params: &mut [Complex64], grads: &[Complex64], lr: f64) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::invalid("parameter and gradient lengths differ"));
        }
        let finite = grads.iter().all(|g| g.re.is_finite() && g.im.is_finite());
        let (c1, c2) = self.begin(2 * grads.len(), finite)?;
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            p.re -= self.delta(2 * k, g.re, lr, c1, c2);
            p.im -= self.delta(2 * k + 1, g.im, lr, c1, c2);
        }
        Ok(())
    }
}

/// `floor + ½(lr0 - floor)(1 + cos(π epoch / total))`.
pub fn cosine_lr(epoch: usize, total: usize, lr0: f64, floor: f64) -> f64 {
    if total == 0 {
        return lr0;
    }
    let e = epoch.min(total) as f64;
    floor + 0.5 * (lr0 - floor) * (1.0 + (std::f64::consts::PI * e / total as f64).cos())
}

/// Back-projection estimate `J_p = α_p G_S^H y_p`, with `α_p` the scalar
/// minimizing `‖G_S(α G_S^H y_p) - y_p‖` over active receivers.
pub fn backprojection_init(ch: &FrequencyChannel) -> Result<CMatrix> {
    let mut back = ch.e_meas.dot(&ch.g_s_conj);
    let pred = ch.predict(&back)?;
    for (p, mut row) in back.rows_mut().into_iter().enumerate() {
        let num = norm_sq(row.iter());
        let den = norm_sq(pred.row(p).iter());
        let alpha = if den > 0.0 { num / den } else { 0.0 };
        row.mapv_inplace(|v| v * alpha);
    }
    Ok(back)
}

/// `10 log10(peak² / MSE)` with `peak = max(truth)`; `+∞` when MSE is 0.
pub fn psnr(recon: &[f64], truth: &[f64]) -> Result<f64> {
    if recon.len() != truth.len() || truth.is_empty() {
        return Err(Error::invalid("PSNR needs two non-empty maps of equal size"));
    }
    let peak = truth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(Error::invalid(format!("PSNR peak value must be positive, got {peak}")));
    }
    let mse = recon.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / truth.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Every frequency active from the first epoch.
    Simultaneous,
    /// Frequencies switched on from low to high at stage boundaries.
    Hopping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    /// Cross term weighted by the decaying β.
    Cc,
    /// β ≡ 0.
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub total_epochs: usize,
    pub strategy: Strategy,
    /// One fraction per frequency under hopping; ignored otherwise.
    pub stage_fractions: Vec<f64>,
    pub lr_theta: f64,
    pub lr_j: f64,
    pub lr_floor: f64,
    pub beta_mode: BetaMode,
    pub seed: u64,
    pub psnr_every: usize,
    pub dims: Vec<usize>,
    pub feature_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_epochs: 15000,
            strategy: Strategy::Hopping,
            stage_fractions: vec![0.2, 0.2, 0.6],
            lr_theta: 1e-3,
            lr_j: 2e-3,
            lr_floor: 0.0,
            beta_mode: BetaMode::Cc,
            seed: 0,
            psnr_every: 100,
            dims: DEFAULT_DIMS.to_vec(),
            feature_std: DEFAULT_FEATURE_STD,
        }
    }
}

/// Default hopping split for a given number of frequencies: the last stage
/// takes 60% and the earlier stages share the rest equally.
pub fn default_stage_fractions(n_freq: usize) -> Vec<f64> {
    match n_freq {
        0 => vec![],
        1 => vec![1.0],
        n => {
            let early = 0.4 / (n - 1) as f64;
            let mut f = vec![early; n - 1];
            f.push(0.6);
            f
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_freq: usize) -> Result<()> {
        if n_freq == 0 {
            return Err(Error::invalid("at least one frequency is required"));
        }
        if !(self.lr_theta > 0.0) || !(self.lr_j > 0.0) || !(self.lr_floor >= 0.0) {
            return Err(Error::invalid("learning rates must be positive and the floor non-negative"));
        }
        if self.psnr_every == 0 {
            return Err(Error::invalid("psnr_every must be at least 1"));
        }
        if !(self.feature_std > 0.0) {
            return Err(Error::invalid("feature_std must be positive"));
        }
        if self.strategy == Strategy::Hopping {
            if self.stage_fractions.len() != n_freq {
                return Err(Error::invalid(format!(
                    "hopping needs one stage fraction per frequency ({n_freq}), got {}",
                    self.stage_fractions.len()
                )));
            }
            if self.stage_fractions.iter().any(|&f| !(f > 0.0)) {
                return Err(Error::invalid("stage fractions must be positive"));
            }
            let sum: f64 = self.stage_fractions.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("stage fractions must sum to 1, got {sum}")));
            }
            if self.total_epochs > 0 && self.total_epochs < n_freq {
                return Err(Error::invalid("fewer epochs than stages"));
            }
        }
        Ok(())
    }

    /// First epoch of each stage (a single stage for simultaneous runs).
    pub fn stage_starts(&self, n_freq: usize) -> Vec<usize> {
        match self.strategy {
            Strategy::Simultaneous => vec![0],
            Strategy::Hopping => {
                let mut acc = 0.0;
                let mut starts = Vec::with_capacity(n_freq);
                for f in &self.stage_fractions {
                    starts.push((acc * self.total_epochs as f64).round() as usize);
                    acc += f;
                }
                starts
            }
        }
    }
}

/// One row of the loss trace. Inactive channels carry `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub epoch: usize,
    pub stage: usize,
    pub beta: f64,
    pub terms: Vec<Option<FrequencyTerms>>,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub psnr_epochs: Vec<usize>,
    pub psnr_eps: Vec<f64>,
    /// Present only when the truth has a positive conductivity peak.
    pub psnr_sigma: Option<Vec<f64>>,
    pub loss_trace: Vec<LossRow>,
    pub final_maps: MediumMaps,
    pub checkpoint: Checkpoint,
    pub elapsed_seconds: f64,
    /// Reason the run stopped early, if it did.
    pub failure: Option<String>,
}

impl RunRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn final_psnr_eps(&self) -> f64 {
        if self.failed() {
            f64::NAN
        } else {
            self.psnr_eps.last().copied().unwrap_or(f64::NAN)
        }
    }
}

/// State of one inversion in progress.
pub struct Inversion<'a> {
    channels: &'a [FrequencyChannel],
    grid: Grid,
    truth: &'a MediumMaps,
    config: TrainConfig,
    embedding: FourierEmbedding,
    features: Array2<f64>,
    params: NetworkParams,
    sources: Vec<Option<CMatrix>>,
    adam_theta: Adam,
    adam_j: Vec<Option<Adam>>,
    stage_starts: Vec<usize>,
    epoch: usize,
    record: RunRecord,
}

impl<'a> Inversion<'a> {
    pub fn new(channels: &'a [FrequencyChannel], grid: &Grid, truth: &'a MediumMaps, config: &TrainConfig) -> Result<Self> {
        config.validate(channels.len())?;
        if channels.iter().any(|c| c.n_cells() != grid.len()) || truth.eps_r.len() != grid.len() {
            return Err(Error::invalid("channels, truth and grid disagree on the cell count"));
        }
        if channels.windows(2).any(|w| w[0].freq >= w[1].freq) {
            return Err(Error::invalid("channels must be sorted by ascending frequency"));
        }
        let (embedding, params) = init_params(config.seed, &config.dims, config.feature_std)?;
        let features = embedding.features(&grid.normalized_centers());
        let checkpoint = Checkpoint::new(config.seed, config.feature_std, grid.half_width(), embedding.clone(), params.clone());
        let n_params = params.n_params();
        Ok(Self {
            channels,
            grid: *grid,
            truth,
            embedding,
            features,
            sources: vec![None; channels.len()],
            adam_theta: Adam::new(n_params),
            adam_j: vec![None; channels.len()],
            stage_starts: config.stage_starts(channels.len()),
            epoch: 0,
            record: RunRecord {
                seed: config.seed,
                psnr_epochs: Vec::new(),
                psnr_eps: Vec::new(),
                psnr_sigma: truth_has_conductivity(truth).then(Vec::new),
                loss_trace: Vec::new(),
                final_maps: MediumMaps::background(grid),
                checkpoint,
                elapsed_seconds: 0.0,
                failure: None,
            },
            params,
            config: config.clone(),
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn sources(&self) -> &[Option<CMatrix>] {
        &self.sources
    }

    /// Stage index and active channels at `epoch`.
    pub fn active_at(&self, epoch: usize) -> (usize, Vec<usize>) {
        match self.config.strategy {
            Strategy::Simultaneous => (0, (0..self.channels.len()).collect()),
            Strategy::Hopping => {
                let stage = self.stage_starts.partition_point(|&s| s <= epoch).max(1) - 1;
                (stage, (0..=stage).collect())
            }
        }
    }

    fn beta_at(&self, epoch: usize) -> Result<f64> {
        match (self.config.beta_mode, self.config.strategy) {
            (BetaMode::Classical, _) => Ok(0.0),
            (BetaMode::Cc, Strategy::Simultaneous) => beta(epoch, self.config.total_epochs),
            (BetaMode::Cc, Strategy::Hopping) => {
                let (start, len) = stage_window(epoch, &self.stage_starts, self.config.total_epochs)?;
                beta(epoch - start, len)
            }
        }
    }

    /// Current `(eps_r, sigma)` on the training grid.
    pub fn current_maps(&self) -> MediumMaps {
        let tape = forward_features(&self.features, &self.params);
        MediumMaps {
            n: self.grid.n(),
            eps_r: tape.eps_r.to_vec(),
            sigma: tape.sigma.to_vec(),
        }
    }

    fn log_psnr(&mut self) -> Result<()> {
        let maps = self.current_maps();
        self.record.psnr_epochs.push(self.epoch);
        self.record.psnr_eps.push(psnr(&maps.eps_r, &self.truth.eps_r)?);
        if let Some(series) = self.record.psnr_sigma.as_mut() {
            series.push(psnr(&maps.sigma, &self.truth.sigma)?);
        }
        Ok(())
    }

    /// One full-batch update. Returns the loss row it logged.
    pub fn step(&mut self) -> Result<LossRow> {
        let epoch = self.epoch;
        let (stage, active) = self.active_at(epoch);
        for &i in &active {
            if self.sources[i].is_none() {
                let j0 = backprojection_init(&self.channels[i])?;
                self.adam_j[i] = Some(Adam::new(2 * j0.len()));
                self.sources[i] = Some(j0);
            }
        }
        let b = self.beta_at(epoch)?;
        let spec = LossSpec {
            channels: self.channels,
            features: &self.features,
            active: &active,
            weights: TermWeights::total(b),
        };
        let (value, terms, grads) = gradient(&spec, &self.params, &self.sources)?;

        let total = self.config.total_epochs;
        let lr_theta = cosine_lr(epoch, total, self.config.lr_theta, self.config.lr_floor);
        let lr_j = cosine_lr(epoch, total, self.config.lr_j, self.config.lr_floor);
        let flat_grad = grads.d_theta.to_flat();
        let mut flat = self.params.to_flat();
        self.adam_theta.step(&mut flat, &flat_grad, lr_theta)?;
        self.params.set_flat(&flat)?;
        for &i in &active {
            let g = grads.d_j[i].as_ref().expect("active channel has a gradient");
            let j = self.sources[i].as_mut().expect("activated above");
            let adam = self.adam_j[i].as_mut().expect("activated above");
            adam.step_complex(
                j.as_slice_mut().expect("standard layout"),
                g.as_slice().expect("standard layout"),
                lr_j,
            )?;
        }

        let mut per = vec![None; self.channels.len()];
        for (i, t) in terms.per_frequency {
            per[i] = Some(t);
        }
        let row = LossRow {
            epoch,
            stage,
            beta: b,
            terms: per,
            total: value,
        };
        self.record.loss_trace.push(row.clone());
        self.epoch += 1;
        Ok(row)
    }

    /// Runs to `total_epochs`, logging PSNR every `psnr_every` epochs.
    ///
    /// A non-finite loss or gradient marks the record failed and stops the
    /// run; other errors propagate.
    pub fn run(mut self) -> Result<RunRecord> {
        let start = Instant::now();
        let total = self.config.total_epochs;
        loop {
            if self.epoch % self.config.psnr_every == 0 {
                self.log_psnr()?;
            }
            if self.epoch >= total {
                break;
            }
            match self.step() {
                Ok(_) => {}
                Err(Error::NonFinite { term }) => {
                    self.record.failure = Some(format!("non-finite {term} at epoch {}", self.epoch));
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        self.record.final_maps = self.current_maps();
        self.record.checkpoint = Checkpoint::new(
            self.config.seed,
            self.config.feature_std,
            self.grid.half_width(),
            self.embedding.clone(),
            self.params.clone(),
        );
        self.record.elapsed_seconds = start.elapsed().as_secs_f64();
        Ok(self.record)
    }
}

fn truth_has_conductivity(truth: &MediumMaps) -> bool {
    truth.sigma.iter().any(|&s| s > 0.0)
}

/// One inversion from a fresh network seeded by `config.seed`.
pub fn run_inversion(channels: &[FrequencyChannel], grid: &Grid, truth: &MediumMaps, config: &TrainConfig) -> Result<RunRecord> {
    Inversion::new(channels, grid, truth, config)?.run()
}

/// Five-number summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile with linear interpolation between order statistics
/// (position `q (n - 1)` in the sorted sample).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn five_number(values: &[f64]) -> Result<FiveNumber> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("five-number summary needs a non-empty sample without NaN"));
    }
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    Ok(FiveNumber {
        min: s[0],
        q1: quantile(&s, 0.25),
        median: quantile(&s, 0.5),
        q3: quantile(&s, 0.75),
        max: s[s.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub epochs: Vec<usize>,
    /// Pointwise mean over successful runs.
    pub mean: Vec<f64>,
    /// Pointwise population standard deviation.
    pub std: Vec<f64>,
    pub final_psnr: FiveNumber,
    /// Index (into the run list) of the run whose final PSNR is the median,
    /// taking the lower middle run for even counts.
    pub median_run: usize,
    pub failed_runs: Vec<usize>,
}

pub fn ensemble_stats(runs: &[RunRecord]) -> Result<EnsembleStats> {
    if runs.len() < 2 {
        return Err(Error::invalid("ensemble statistics need at least two runs"));
    }
    let ok: Vec<usize> = (0..runs.len()).filter(|&i| !runs[i].failed()).collect();
    if ok.is_empty() {
        return Err(Error::invalid("every run in the ensemble failed"));
    }
    let failed_runs = (0..runs.len()).filter(|&i| runs[i].failed()).collect();
    let epochs = runs[ok[0]].psnr_epochs.clone();
    if ok.iter().any(|&i| runs[i].psnr_epochs != epochs) {
        return Err(Error::invalid("runs were sampled at different epochs"));
    }
    let n = ok.len() as f64;
    let mut mean = vec![0.0; epochs.len()];
    let mut std = vec![0.0; epochs.len()];
    for t in 0..epochs.len() {
        let m = ok.iter().map(|&i| runs[i].psnr_eps[t]).sum::<f64>() / n;
        let var = ok.iter().map(|&i| (runs[i].psnr_eps[t] - m).powi(2)).sum::<f64>() / n;
        mean[t] = m;
        std[t] = var.sqrt();
    }
    let finals: Vec<f64> = ok.iter().map(|&i| runs[i].final_psnr_eps()).collect();
    let final_psnr = five_number(&finals)?;
    let mut order = ok.clone();
    order.sort_by(|&a, &b| {
        runs[a]
            .final_psnr_eps()
            .partial_cmp(&runs[b].final_psnr_eps())
            .expect("successful runs have finite or infinite PSNR")
            .then(a.cmp(&b))
    });
    let median_run = order[(order.len() - 1) / 2];
    Ok(EnsembleStats {
        epochs,
        mean,
        std,
        final_psnr,
        median_run,
        failed_runs,
    })
}

/// Runs one inversion per seed (in parallel) and summarizes them.
pub fn multi_run_seeds(
    channels: &[FrequencyChannel],
    grid: &Grid,
    truth: &MediumMaps,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<(EnsembleStats, Vec<RunRecord>)> {
    if seeds.len() < 2 {
        return Err(Error::invalid("an ensemble needs at least two runs"));
    }
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = TrainConfig { seed, ..config.clone() };
            run_inversion(channels, grid, truth, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ensemble_stats(&runs)?, runs))
}

/// Seeds `config.seed .. config.seed + n_runs`.
pub fn multi_run(
    channels: &[FrequencyChannel],
    grid: &Grid,
    truth: &MediumMaps,
    config: &TrainConfig,
    n_runs: usize,
) -> Result<(EnsembleStats, Vec<RunRecord>)> {
    let seeds: Vec<u64> = (0..n_runs as u64).map(|k| config.seed + k).collect();
    multi_run_seeds(channels, grid, truth, config, &seeds)
}

/// Evaluates a saved network at the cell centers of `grid`, normalized by
/// the training half-width. Cells outside the training ROI are evaluated
/// by the same formula (extrapolation).
pub fn infer(checkpoint: &Checkpoint, grid: &Grid) -> MediumMaps {
    let coords = grid.normalized_centers_by(checkpoint.reference_half_width);
    let tape = forward_features(&checkpoint.embedding.features(&coords), &checkpoint.params);
    MediumMaps {
        n: grid.n(),
        eps_r: tape.eps_r.to_vec(),
        sigma: tape.sigma.to_vec(),
    }
}
