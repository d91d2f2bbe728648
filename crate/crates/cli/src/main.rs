use std::path::PathBuf;
use std::process::ExitCode;

use ccpinn::dataio::{parse_fresnel, save_dataset, subsample_and_split, ColorRange};
use ccpinn::experiment::{self, ExperimentConfig, SceneSpec};
use ccpinn::physics::DomainBackend;
use ccpinn::scene::Phantom;
use ccpinn::trainer::{BetaMode, Strategy};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ccpinn", version, about = "Contrast-source PINN microwave imaging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic dataset and save it.
    Generate(GenerateArgs),
    /// Run one inversion.
    Invert(RunArgs),
    /// Run several inversions with consecutive seeds.
    Ensemble(EnsembleArgs),
    /// Redraw curves and boxplots from stored run or ensemble directories.
    Report(ReportArgs),
    /// Convert a Fresnel FoamTwinDielTM text file into a dataset.
    Fresnel(FresnelArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Simultaneous,
    Hopping,
}

#[derive(Clone, Copy, ValueEnum)]
enum BetaArg {
    Cc,
    Classical,
}

/// Flags shared by every command that builds an [`ExperimentConfig`].
#[derive(Args)]
struct Common {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset file.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Frequencies in GHz, comma separated.
    #[arg(long, value_delimiter = ',')]
    freqs_ghz: Option<Vec<f64>>,
    /// Cells per side of the inversion grid.
    #[arg(long)]
    grid: Option<usize>,
    /// Zero-padding factor of the spectral domain operator (0 selects dense).
    #[arg(long)]
    pad: Option<usize>,
    /// Output directory, relative to CCPINN_OUTPUT_ROOT when that is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base directory for relative output paths.
    #[arg(long, env = "CCPINN_OUTPUT_ROOT")]
    output_root: Option<PathBuf>,
}

#[derive(Args)]
struct Train {
    /// Total training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Hopping stage fractions, comma separated.
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<f64>>,
    /// `classical` drops the cross-correlation term.
    #[arg(long, value_enum)]
    beta_mode: Option<BetaArg>,
    /// Network initialization seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr_theta: Option<f64>,
    #[arg(long)]
    lr_j: Option<f64>,
    /// Epoch interval between PSNR evaluations.
    #[arg(long)]
    psnr_every: Option<usize>,
    /// Upper end of the permittivity color range.
    #[arg(long)]
    eps_max: Option<f64>,
    /// Upper end of the conductivity color range; enables sigma images.
    #[arg(long)]
    sigma_max: Option<f64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// Austria phantom permittivity (ignored with --scene).
    #[arg(long, default_value_t = 3.0)]
    eps: f64,
    /// Austria phantom conductivity in S/m.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Scene JSON file instead of the Austria phantom.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Signal-to-noise ratio in dB; omit for noiseless data.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Overwrite an existing dataset.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    train: Train,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    train: Train,
    /// Number of runs.
    #[arg(long, short = 'n')]
    runs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run or ensemble directories.
    #[arg(required = true)]
    dirs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FresnelArgs {
    /// FoamTwinDielTM text file.
    input: PathBuf,
    /// Band in GHz, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
    band_ghz: Vec<f64>,
    /// Receiver spacing in degrees.
    #[arg(long, default_value_t = 5.0)]
    rx_step: f64,
    /// Reference phantom JSON replacing the built-in estimate.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

/// Loads `--config` (or defaults) and applies the shared flags. Inversions
/// without a config file use every dataset frequency unless `--freqs-ghz`
/// is given.
fn base_config(common: &Common, inversion: bool) -> ccpinn::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None if inversion => ExperimentConfig {
            frequencies: Vec::new(),
            ..ExperimentConfig::default()
        },
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &common.dataset {
        cfg.dataset = Some(d.clone());
    }
    if let Some(f) = &common.freqs_ghz {
        cfg.frequencies = f.iter().map(|g| g * 1e9).collect();
    }
    if let Some(n) = common.grid {
        cfg.grid_n = n;
    }
    if let Some(p) = common.pad {
        cfg.backend = if p == 0 {
            DomainBackend::Dense
        } else {
            DomainBackend::Spectral { pad_factor: p }
        };
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    if let Some(root) = &common.output_root {
        if cfg.output_dir.is_relative() {
            cfg.output_dir = root.join(&cfg.output_dir);
        }
    }
    Ok(cfg)
}

/// Applies training flags. Without `--stages` and without a config file,
/// the default split for the frequency count is used.
fn apply_train(cfg: &mut ExperimentConfig, t: &Train, from_config_file: bool) {
    let tc = &mut cfg.train;
    if let Some(e) = t.epochs {
        tc.total_epochs = e;
    }
    if let Some(s) = t.strategy {
        tc.strategy = match s {
            StrategyArg::Simultaneous => Strategy::Simultaneous,
            StrategyArg::Hopping => Strategy::Hopping,
        };
    }
    if let Some(b) = t.beta_mode {
        tc.beta_mode = match b {
            BetaArg::Cc => BetaMode::Cc,
            BetaArg::Classical => BetaMode::Classical,
        };
    }
    if let Some(s) = t.seed {
        tc.seed = s;
    }
    if let Some(v) = t.lr_theta {
        tc.lr_theta = v;
    }
    if let Some(v) = t.lr_j {
        tc.lr_j = v;
    }
    if let Some(v) = t.psnr_every {
        tc.psnr_every = v;
    }
    if let Some(m) = t.eps_max {
        cfg.render.eps_range = ColorRange { lo: 1.0, hi: m };
    }
    if let Some(m) = t.sigma_max {
        cfg.render.sigma_range = Some(ColorRange { lo: 0.0, hi: m });
    }
    match &t.stages {
        Some(s) => cfg.train.stage_fractions = s.clone(),
        None if !from_config_file => {
            let n = inversion_frequency_count(cfg);
            cfg.train.stage_fractions = ccpinn::trainer::default_stage_fractions(n);
        }
        None => {}
    }
}

/// Frequencies the inversion will use: the configured list, or all of the
/// dataset's when the list is empty.
fn inversion_frequency_count(cfg: &ExperimentConfig) -> usize {
    if !cfg.frequencies.is_empty() {
        return cfg.frequencies.len();
    }
    cfg.dataset
        .as_ref()
        .and_then(|p| ccpinn::dataio::load_dataset(p).ok())
        .map(|d| d.header.frequencies.len())
        .unwrap_or(0)
}

fn print_run(run: &ccpinn::trainer::RunRecord) {
    let eps = run.final_psnr_eps();
    let first = run.psnr_eps.first().copied().unwrap_or(f64::NAN);
    println!("seed {}: eps_r PSNR {first:.3} dB -> {eps:.3} dB", run.seed);
    if let Some(s) = run.psnr_sigma.as_ref().and_then(|s| s.last()) {
        println!("seed {}: sigma PSNR {s:.3} dB", run.seed);
    }
    if let Some(f) = &run.failure {
        println!("seed {}: FAILED ({f})", run.seed);
    }
}

fn run(cli: Cli) -> ccpinn::Result<bool> {
    match cli.command {
        Command::Generate(a) => {
            let mut cfg = base_config(&a.common, false)?;
            cfg.scene = Some(match &a.scene {
                Some(p) => SceneSpec::File { path: p.clone() },
                None => SceneSpec::Austria {
                    eps_r: a.eps,
                    sigma: a.sigma,
                },
            });
            if a.snr.is_some() {
                cfg.snr_db = a.snr;
            }
            if let Some(s) = a.noise_seed {
                cfg.noise_seed = s;
            }
            let ds = experiment::generate(&cfg, a.force)?;
            let path = cfg.dataset.as_ref().expect("validated");
            println!(
                "wrote {} ({} frequencies, {}x{} each)",
                path.display(),
                ds.header.frequencies.len(),
                ds.header.layout.n_tx(),
                ds.header.layout.n_rx()
            );
            Ok(true)
        }
        Command::Invert(a) => {
            let mut cfg = base_config(&a.common, true)?;
            apply_train(&mut cfg, &a.train, a.common.config.is_some());
            let record = experiment::invert(&cfg)?;
            print_run(&record);
            println!("outputs in {}", cfg.output_dir.display());
            Ok(!record.failed())
        }
        Command::Ensemble(a) => {
            let mut cfg = base_config(&a.common, true)?;
            apply_train(&mut cfg, &a.train, a.common.config.is_some());
            if let Some(n) = a.runs {
                cfg.n_runs = n;
            }
            let (stats, runs) = experiment::ensemble(&cfg)?;
            for r in &runs {
                print_run(r);
            }
            let s = stats.final_psnr;
            println!(
                "final eps_r PSNR: min {:.3} q1 {:.3} median {:.3} q3 {:.3} max {:.3} (median run: seed {})",
                s.min, s.q1, s.median, s.q3, s.max, runs[stats.median_run].seed
            );
            println!("outputs in {}", cfg.output_dir.display());
            Ok(stats.failed_runs.is_empty())
        }
        Command::Report(a) => {
            let rep = experiment::report(&a.dirs, &a.out)?;
            for (label, c) in rep.labels.iter().zip(&rep.curves) {
                println!("{label}: final mean PSNR {:.3} dB", c.mean.last().copied().unwrap_or(f64::NAN));
            }
            println!("figures in {}", a.out.display());
            Ok(true)
        }
        Command::Fresnel(a) => {
            if a.out.exists() && !a.force {
                return Err(ccpinn::Error::InvalidArgument(format!(
                    "{} already exists (use --force to overwrite)",
                    a.out.display()
                )));
            }
            let records = parse_fresnel(&a.input)?;
            let mut ds = subsample_and_split(&records, a.rx_step, &a.band_ghz)?;
            if let Some(p) = &a.reference {
                ds.header.reference = Some(Phantom::load_json(p)?);
            }
            save_dataset(&ds, &a.out)?;
            println!(
                "wrote {} ({} frequencies, {} transmitters, {} receivers per transmitter)",
                a.out.display(),
                ds.header.frequencies.len(),
                ds.header.layout.n_tx(),
                ds.header.layout.active_per_tx()[0]
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
