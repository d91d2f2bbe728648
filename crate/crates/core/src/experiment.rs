//! End-to-end experiment driver: dataset generation, single inversions,
//! ensembles and reports. The command-line front end only parses flags
//! into an [`ExperimentConfig`] and calls into this module.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{
    export_ensemble, export_run, load_dataset, read_boxplot_csv, read_mean_curve_csv, read_psnr_csv, render_boxplots,
    render_curves, save_dataset, write_png, ColorRange, Dataset, DatasetHeader, DatasetKind, GenerationInfo,
    MeanCurve, RenderSettings, DATASET_SCHEMA,
};
use crate::physics::{
    add_noise_masked, circular_layout, data_operator, forward_solve_all, incident_fields, incident_fields_at,
    ArrayLayout, DomainBackend, DomainOperator, FrequencyChannel, Solver,
};
use crate::scene::{
    austria_phantom, build_grid, contrast_map, rasterize, rasterize_area_weighted, Grid, MediumMaps, Phantom,
};
use crate::trainer::{default_stage_fractions, multi_run, run_inversion, EnsembleStats, RunRecord, Strategy, TrainConfig};
use crate::{wavenumber, Error, Result};

pub const CONFIG_FILE: &str = "config.json";

/// Where the scatterer comes from when generating data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneSpec {
    Austria { eps_r: f64, sigma: f64 },
    File { path: PathBuf },
}

impl SceneSpec {
    pub fn phantom(&self) -> Result<Phantom> {
        match self {
            SceneSpec::Austria { eps_r, sigma } => austria_phantom(*eps_r, *sigma),
            SceneSpec::File { path } => Phantom::load_json(path),
        }
    }
}

/// Transceivers on a circle around the ROI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySpec {
    pub radius: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    /// Receivers within this angle of a transmitter are not recorded.
    pub exclusion_halfangle_deg: f64,
}

impl Default for ArraySpec {
    fn default() -> Self {
        Self {
            radius: 3.0,
            n_tx: 12,
            n_rx: 120,
            exclusion_halfangle_deg: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scatterer for `generate`.
    pub scene: Option<SceneSpec>,
    /// Dataset for `generate` (written) and `invert`/`ensemble` (read).
    pub dataset: Option<PathBuf>,
    /// `None` means noiseless.
    pub snr_db: Option<f64>,
    /// Hz. For inversions, an empty list uses every dataset frequency.
    pub frequencies: Vec<f64>,
    pub roi_half_width: f64,
    /// Cells per side of the inversion grid.
    pub grid_n: usize,
    /// Forward-solve grid is `grid_n * forward_refinement` per side.
    pub forward_refinement: usize,
    /// Per-axis subsamples for area-weighted rasterization of the forward model.
    pub subsamples: usize,
    pub array: ArraySpec,
    pub noise_seed: u64,
    pub backend: DomainBackend,
    pub train: TrainConfig,
    pub n_runs: usize,
    pub render: RenderSettings,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scene: None,
            dataset: None,
            snr_db: None,
            frequencies: vec![0.3e9, 0.4e9, 0.5e9],
            roi_half_width: 0.5,
            grid_n: 64,
            forward_refinement: 2,
            subsamples: 4,
            array: ArraySpec::default(),
            noise_seed: 0,
            backend: DomainBackend::default(),
            train: TrainConfig::default(),
            n_runs: 11,
            render: RenderSettings {
                eps_range: ColorRange { lo: 1.0, hi: 6.5 },
                sigma_range: None,
                image_px: 256,
            },
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    /// Replaces the stage split with the default for `n_freq` frequencies.
    pub fn with_default_stages(mut self, n_freq: usize) -> Self {
        self.train.stage_fractions = default_stage_fractions(n_freq);
        self
    }

    fn check_common(&self) -> Result<()> {
        if !(self.roi_half_width > 0.0) {
            return Err(Error::invalid("roi_half_width must be positive"));
        }
        if self.grid_n == 0 {
            return Err(Error::invalid("grid_n must be at least 1"));
        }
        if let Some(s) = self.snr_db {
            if s.is_nan() {
                return Err(Error::invalid("snr_db must be a number"));
            }
        }
        if self.frequencies.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::invalid("frequencies must be positive"));
        }
        if let DomainBackend::Spectral { pad_factor } = self.backend {
            if pad_factor < 2 {
                return Err(Error::invalid("spectral pad factor must be at least 2"));
            }
        }
        self.render.eps_range.validate()?;
        if let Some(r) = self.render.sigma_range {
            r.validate()?;
        }
        if self.render.image_px == 0 {
            return Err(Error::invalid("image_px must be positive"));
        }
        Ok(())
    }

    pub fn validate_generate(&self) -> Result<()> {
        self.check_common()?;
        if self.scene.is_none() {
            return Err(Error::invalid("generate needs a scene"));
        }
        if self.dataset.is_none() {
            return Err(Error::invalid("generate needs a dataset output path"));
        }
        if self.frequencies.is_empty() {
            return Err(Error::invalid("generate needs at least one frequency"));
        }
        if self.forward_refinement < 2 {
            return Err(Error::invalid("forward grid must be at least twice as fine as the inversion grid"));
        }
        if self.subsamples == 0 {
            return Err(Error::invalid("subsamples must be at least 1"));
        }
        Ok(())
    }

    /// Checks everything except the dataset contents.
    pub fn validate_invert(&self) -> Result<()> {
        self.check_common()?;
        if self.dataset.is_none() {
            return Err(Error::invalid("inversion needs a dataset path"));
        }
        Ok(())
    }

    pub fn validate_ensemble(&self) -> Result<()> {
        self.validate_invert()?;
        if self.n_runs < 2 {
            return Err(Error::invalid("an ensemble needs at least two runs"));
        }
        Ok(())
    }
}

fn sorted_frequencies(freqs: &[f64]) -> Result<Vec<f64>> {
    let mut f = freqs.to_vec();
    f.sort_by(|a, b| a.partial_cmp(b).expect("validated"));
    if f.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("duplicate frequency"));
    }
    Ok(f)
}

/// Simulates a dataset for `phantom` (no file I/O).
///
/// The forward model is rasterized area-weighted on a grid
/// `forward_refinement` times finer than the inversion grid; noise is added
/// to the scattered field over the active receivers of each transmitter.
pub fn synthesize(phantom: &Phantom, cfg: &ExperimentConfig) -> Result<Dataset> {
    let freqs = sorted_frequencies(&cfg.frequencies)?;
    let fine_n = cfg.grid_n * cfg.forward_refinement;
    let fine = build_grid(cfg.roi_half_width, fine_n)?;
    let layout = circular_layout(
        &fine,
        cfg.array.radius,
        cfg.array.n_tx,
        cfg.array.n_rx,
        cfg.array.exclusion_halfangle_deg,
    )?;
    let medium = rasterize_area_weighted(phantom, &fine, cfg.subsamples);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
    let mut e_meas = Vec::with_capacity(freqs.len());
    let mut e_inc_rx = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let k0 = wavenumber(f);
        let chi = contrast_map(&medium, f)?.chi;
        let e_inc = incident_fields(&layout, &fine, k0)?;
        let op = match cfg.backend {
            DomainBackend::Dense => DomainOperator::Dense(crate::physics::domain_operator_dense(&fine, k0)?),
            DomainBackend::Spectral { pad_factor } => {
                DomainOperator::Spectral(crate::physics::build_spectral_kernel(&fine, k0, pad_factor)?)
            }
        };
        let e_tot = forward_solve_all(&chi, &e_inc, &op, Solver::Auto)?;
        let mut sources = e_tot;
        for mut row in sources.rows_mut() {
            for (v, c) in row.iter_mut().zip(&chi) {
                *v *= c;
            }
        }
        let g_s = data_operator(&layout, &fine, k0)?;
        let mut scat = sources.dot(&g_s.t());
        ndarray::Zip::from(&mut scat).and(&layout.mask).for_each(|v, &m| {
            if !m {
                *v = num_complex::Complex64::new(0.0, 0.0);
            }
        });
        let noisy = match cfg.snr_db {
            Some(snr) => add_noise_masked(&scat, &layout.mask, snr, &mut rng)?,
            None => scat,
        };
        e_meas.push(noisy);
        e_inc_rx.push(incident_fields_at(&layout, k0)?);
    }
    let ds = Dataset {
        header: DatasetHeader {
            schema_version: DATASET_SCHEMA,
            kind: DatasetKind::Synthetic,
            description: match &cfg.scene {
                Some(SceneSpec::Austria { eps_r, sigma }) => format!("austria eps_r={eps_r} sigma={sigma}"),
                Some(SceneSpec::File { path }) => format!("scene {}", path.display()),
                None => "custom phantom".into(),
            },
            frequencies: freqs,
            layout,
            roi_half_width: cfg.roi_half_width,
            generation: Some(GenerationInfo {
                grid_n: fine_n,
                subsamples: cfg.subsamples,
                seed: cfg.noise_seed,
                snr_db: cfg.snr_db,
            }),
            reference: Some(phantom.clone()),
        },
        e_meas,
        e_inc_rx,
    };
    ds.validate()?;
    Ok(ds)
}

/// Builds the dataset described by `cfg` and writes it to `cfg.dataset`.
/// An existing file is kept unless `force` is set.
pub fn generate(cfg: &ExperimentConfig, force: bool) -> Result<Dataset> {
    cfg.validate_generate()?;
    let path = cfg.dataset.as_ref().expect("validated");
    if path.exists() && !force {
        return Err(Error::invalid(format!("{} already exists (use force to overwrite)", path.display())));
    }
    let phantom = cfg.scene.as_ref().expect("validated").phantom()?;
    let ds = synthesize(&phantom, cfg)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    save_dataset(&ds, path)?;
    Ok(ds)
}

/// Everything an inversion needs, built from a dataset.
pub struct Problem {
    pub grid: Grid,
    pub layout: ArrayLayout,
    pub channels: Vec<FrequencyChannel>,
    pub frequencies: Vec<f64>,
    pub truth: MediumMaps,
    pub reference: Phantom,
}

/// Selects frequencies, builds channels on the inversion grid and
/// rasterizes the reference (cell centers) as PSNR truth.
pub fn prepare(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<Problem> {
    let ds = if cfg.frequencies.is_empty() {
        dataset.clone()
    } else {
        dataset.select(&cfg.frequencies)?
    };
    let reference = ds
        .header
        .reference
        .clone()
        .ok_or_else(|| Error::InvalidDataset("dataset has no reference phantom for PSNR".into()))?;
    let grid = build_grid(ds.header.roi_half_width, cfg.grid_n)?;
    let layout = ds.header.layout.clone();
    layout.check_outside(&grid)?;
    let channels = ds
        .header
        .frequencies
        .iter()
        .zip(&ds.e_meas)
        .map(|(&f, m)| FrequencyChannel::build(&grid, &layout, f, m, cfg.backend))
        .collect::<Result<Vec<_>>>()?;
    cfg.train.validate(channels.len())?;
    Ok(Problem {
        truth: rasterize(&reference, &grid),
        grid,
        layout,
        frequencies: ds.header.frequencies.clone(),
        channels,
        reference,
    })
}

fn prepare_output(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    cfg.save(dir.join(CONFIG_FILE))
}

/// Final PSNRs of one run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub final_psnr_eps_r: Option<f64>,
    pub final_psnr_sigma: Option<f64>,
    pub elapsed_seconds: f64,
    pub failure: Option<String>,
}

impl RunSummary {
    pub fn of(run: &RunRecord) -> Self {
        let finite = |v: f64| (!v.is_nan()).then_some(v);
        Self {
            seed: run.seed,
            final_psnr_eps_r: finite(run.final_psnr_eps()),
            final_psnr_sigma: run.psnr_sigma.as_ref().and_then(|s| s.last().copied()).filter(|_| !run.failed()),
            elapsed_seconds: run.elapsed_seconds,
            failure: run.failure.clone(),
        }
    }
}

/// One inversion; outputs go to `cfg.output_dir`.
pub fn invert(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate_invert()?;
    let ds = load_dataset(cfg.dataset.as_ref().expect("validated"))?;
    let problem = prepare(&ds, cfg)?;
    prepare_output(&cfg.output_dir, cfg)?;
    let record = run_inversion(&problem.channels, &problem.grid, &problem.truth, &cfg.train)?;
    export_run(
        &record,
        &problem.frequencies,
        &problem.grid,
        Some(&problem.reference),
        &cfg.render,
        &cfg.output_dir,
    )?;
    let path = cfg.output_dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&RunSummary::of(&record))?).map_err(|e| Error::io(&path, e))?;
    Ok(record)
}

fn mode_label(cfg: &ExperimentConfig) -> &'static str {
    match cfg.train.beta_mode {
        crate::trainer::BetaMode::Cc => "cc",
        crate::trainer::BetaMode::Classical => "classical",
    }
}

/// `cfg.n_runs` inversions with seeds `train.seed ..`; outputs go to
/// `cfg.output_dir`.
pub fn ensemble(cfg: &ExperimentConfig) -> Result<(EnsembleStats, Vec<RunRecord>)> {
    cfg.validate_ensemble()?;
    let ds = load_dataset(cfg.dataset.as_ref().expect("validated"))?;
    let problem = prepare(&ds, cfg)?;
    prepare_output(&cfg.output_dir, cfg)?;
    let (stats, runs) = multi_run(&problem.channels, &problem.grid, &problem.truth, &cfg.train, cfg.n_runs)?;
    export_ensemble(
        mode_label(cfg),
        &stats,
        &runs,
        &problem.frequencies,
        &problem.grid,
        Some(&problem.reference),
        &cfg.render,
        &cfg.output_dir,
    )?;
    let path = cfg.output_dir.join("summary.json");
    let summaries: Vec<RunSummary> = runs.iter().map(RunSummary::of).collect();
    std::fs::write(&path, serde_json::to_string_pretty(&summaries)?).map_err(|e| Error::io(&path, e))?;
    Ok((stats, runs))
}

/// What [`report`] found and drew.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub labels: Vec<String>,
    pub curves: Vec<MeanCurve>,
    /// Whether any curve has a nonzero spread band.
    pub has_band: bool,
    pub boxplots: usize,
}

/// Configuration with the fields allowed to differ between compared
/// directories blanked out.
fn comparable(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.train.beta_mode = crate::trainer::BetaMode::Cc;
    c.train.seed = 0;
    c.n_runs = 0;
    c.output_dir = PathBuf::new();
    c
}

/// Redraws `curves.png` and `boxplot.png` into `out_dir` from the CSVs
/// stored in run or ensemble directories. Directories may differ only in
/// β mode, seed, run count and output location.
pub fn report(dirs: &[PathBuf], out_dir: &Path) -> Result<ReportSummary> {
    if dirs.is_empty() {
        return Err(Error::invalid("report needs at least one directory"));
    }
    let configs = dirs
        .iter()
        .map(|d| ExperimentConfig::load(d.join(CONFIG_FILE)))
        .collect::<Result<Vec<_>>>()?;
    let base = comparable(&configs[0]);
    for (d, c) in dirs.iter().zip(&configs).skip(1) {
        if comparable(c) != base {
            return Err(Error::invalid(format!(
                "{} was produced with a different configuration than {}",
                d.display(),
                dirs[0].display()
            )));
        }
    }
    let mut labels = Vec::new();
    let mut curves = Vec::new();
    let mut boxes = Vec::new();
    for (d, c) in dirs.iter().zip(&configs) {
        labels.push(format!("{} ({})", mode_label(c), d.display()));
        let mean_path = d.join("mean_curve.csv");
        if mean_path.exists() {
            curves.push(read_mean_curve_csv(&mean_path)?);
            for row in read_boxplot_csv(&d.join("boxplot.csv"))? {
                boxes.push(row.summary());
            }
        } else {
            curves.push(MeanCurve::from_series(&read_psnr_csv(&d.join("psnr.csv"))?));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_png(&render_curves(&curves, 640, 400)?, &out_dir.join("curves.png"))?;
    if !boxes.is_empty() {
        write_png(&render_boxplots(&boxes, 320, 400)?, &out_dir.join("boxplot.png"))?;
    }
    Ok(ReportSummary {
        labels,
        has_band: curves.iter().any(|c| c.std.iter().any(|&s| s > 0.0)),
        boxplots: boxes.len(),
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            scene: Some(SceneSpec::Austria { eps_r: 2.0, sigma: 0.0 }),
            dataset: Some(dir.join("data.ccds")),
            snr_db: Some(20.0),
            frequencies: vec![0.4e9, 0.3e9],
            grid_n: 8,
            array: ArraySpec {
                n_tx: 4,
                n_rx: 24,
                ..ArraySpec::default()
            },
            train: TrainConfig {
                total_epochs: 4,
                psnr_every: 2,
                dims: vec![8, 8, 2],
                ..TrainConfig::default()
            },
            output_dir: dir.join("out"),
            n_runs: 2,
            render: RenderSettings {
                eps_range: ColorRange { lo: 1.0, hi: 3.0 },
                sigma_range: None,
                image_px: 32,
            },
            ..ExperimentConfig::default()
        }
        .with_default_stages(2)
    }

    #[test]
    fn generate_refuses_to_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path());
        let ds = generate(&cfg, false).unwrap();
        assert_eq!(ds.header.frequencies, vec![0.3e9, 0.4e9]);
        assert_eq!(ds.header.generation.as_ref().unwrap().grid_n, 16);
        assert!(generate(&cfg, false).is_err());
        assert_eq!(generate(&cfg, true).unwrap(), ds);
    }

    #[test]
    fn noiseless_when_snr_is_omitted() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        let phantom = cfg.scene.as_ref().unwrap().phantom().unwrap();
        cfg.snr_db = None;
        let a = synthesize(&phantom, &cfg).unwrap();
        cfg.noise_seed = 99;
        let b = synthesize(&phantom, &cfg).unwrap();
        assert_eq!(a.e_meas, b.e_meas);
        cfg.snr_db = Some(10.0);
        let c = synthesize(&phantom, &cfg).unwrap();
        assert_ne!(a.e_meas, c.e_meas);
    }

    #[test]
    fn invert_writes_outputs_and_report_reads_them() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path());
        generate(&cfg, false).unwrap();
        let rec = invert(&cfg).unwrap();
        assert!(!rec.failed());
        for f in ["config.json", "psnr.csv", "loss.csv", "checkpoint.json", "final_maps.json", "eps_r.png", "summary.json"] {
            assert!(cfg.output_dir.join(f).exists(), "{f}");
        }
        assert_eq!(ExperimentConfig::load(cfg.output_dir.join(CONFIG_FILE)).unwrap(), cfg);
        let rep = report(&[cfg.output_dir.clone()], &dir.path().join("rep")).unwrap();
        assert!(!rep.has_band);
        assert_eq!(rep.boxplots, 0);

        let mut other = cfg.clone();
        other.grid_n = 6;
        other.output_dir = dir.path().join("other");
        invert(&other).unwrap();
        assert!(report(&[cfg.output_dir.clone(), other.output_dir.clone()], &dir.path().join("rep2")).is_err());
    }

    #[test]
    fn ensemble_exports_one_median_image() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path());
        generate(&cfg, false).unwrap();
        let (stats, runs) = ensemble(&cfg).unwrap();
        assert_eq!(runs.len(), 2);
        assert!(stats.median_run < 2);
        let out = &cfg.output_dir;
        assert!(out.join("median_eps_r.png").exists());
        assert!(!out.join("median_sigma.png").exists());
        assert!(out.join("run_00/psnr.csv").exists() && out.join("run_01/psnr.csv").exists());
        let mut classical = cfg.clone();
        classical.train.beta_mode = crate::trainer::BetaMode::Classical;
        classical.output_dir = dir.path().join("classical");
        ensemble(&classical).unwrap();
        let rep = report(&[cfg.output_dir.clone(), classical.output_dir.clone()], &dir.path().join("rep")).unwrap();
        assert_eq!(rep.curves.len(), 2);
        assert_eq!(rep.boxplots, 2);
        assert!(dir.path().join("rep/boxplot.png").exists());
    }

    #[test]
    fn config_defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: ExperimentConfig = serde_json::from_str(r#"{"grid_n": 32}"#).unwrap();
        assert_eq!(partial.grid_n, 32);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"gridn": 32}"#).is_err());
    }
}
