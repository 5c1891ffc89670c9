//! `rdseg` command-line front end.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use config::{DetectMethod, EstimateMode, RunConfig};
use error::{CliError, CliResult};
use manifest::Manifest;

/// Calibration maps used by `--quick` for CFAR.
pub const QUICK_CALIBRATION_MAPS: usize = 12;

#[derive(Debug, Parser)]
#[command(name = "rdseg", version, about = "Skewness-based RD segment detection for FMCW radar")]
pub struct Cli {
    /// JSON run config, or a manifest written by an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: rdseg-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reduced trial counts for a fast smoke run.
    #[arg(long, global = true)]
    pub quick: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesise RD maps and a truth manifest from a scene.
    Synth {
        /// Scene JSON; replaces `synth.scene`.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Frames to synthesise, each from its own stream.
        #[arg(long)]
        frames: Option<u32>,
    },
    /// Fit Gamma statistics to RD segments.
    Estimate {
        #[arg(long, value_enum)]
        mode: Option<EstimateMode>,
        /// Truth manifest; selects one segment per target.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// RDM1 maps; replace `estimate.inputs`.
        inputs: Vec<PathBuf>,
    },
    /// Run the skewness detector or OS-CFAR on RD maps.
    Detect {
        #[arg(long, value_enum)]
        method: Option<DetectMethod>,
        /// Skewness threshold.
        #[arg(long, allow_negative_numbers = true)]
        threshold: Option<f64>,
        /// RDM1 maps; replace `detect.inputs`.
        inputs: Vec<PathBuf>,
    },
    /// Monte Carlo Pd/Pfa sweep, skewness study and redundancy study.
    Eval,
    /// Calibrate OS-CFAR scales on noise-only maps.
    CfarCalibrate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::Estimate { .. } => "estimate",
            Command::Detect { .. } => "detect",
            Command::Eval => "eval",
            Command::CfarCalibrate => "cfar-calibrate",
        }
    }
}

/// Overwrites every block seed with `seed`.
fn apply_seed(cfg: &mut RunConfig, seed: u64) {
    cfg.master_seed = Some(seed);
    cfg.synth.scene.seed = seed;
    cfg.estimate.seed = seed;
    cfg.detect.calibration.seed = seed;
    cfg.cfar_calibrate.noise.seed = seed;
    if let Some(s) = &mut cfg.eval.sweep {
        s.seed = seed;
    }
    if let Some(s) = &mut cfg.eval.study {
        s.seed = seed;
    }
    if let Some(s) = &mut cfg.eval.redundancy {
        s.seed = seed;
    }
}

/// Effective config: file values, then flags. The output directory is
/// returned separately and cleared from the config so it never enters the
/// hash.
pub fn resolve(cli: &Cli) -> CliResult<(RunConfig, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.take())
        .unwrap_or_else(|| PathBuf::from("rdseg-out"));
    cfg.output_dir = None;

    match &cli.command {
        Command::Synth { scene, frames } => {
            if let Some(p) = scene {
                cfg.synth.scene = commands::read_json(p)?;
            }
            if let Some(f) = frames {
                cfg.synth.frames = *f;
            }
        }
        Command::Estimate { mode, truth, inputs } => {
            if let Some(m) = mode {
                cfg.estimate.mode = *m;
            }
            if truth.is_some() {
                cfg.estimate.truth = truth.clone();
            }
            if !inputs.is_empty() {
                cfg.estimate.inputs = inputs.clone();
            }
        }
        Command::Detect { method, threshold, inputs } => {
            if let Some(m) = method {
                cfg.detect.method = *m;
            }
            if let Some(t) = threshold {
                cfg.detect.detector.threshold = *t;
            }
            if !inputs.is_empty() {
                cfg.detect.inputs = inputs.clone();
            }
        }
        Command::Eval | Command::CfarCalibrate => {}
    }

    if cli.quick {
        cfg.eval.quicken();
        cfg.detect.calibration.n_maps = cfg.detect.calibration.n_maps.min(QUICK_CALIBRATION_MAPS);
        cfg.cfar_calibrate.noise.n_maps = cfg.cfar_calibrate.noise.n_maps.min(QUICK_CALIBRATION_MAPS);
    }
    if let Some(seed) = cli.seed.or(cfg.master_seed) {
        apply_seed(&mut cfg, seed);
    }
    Ok((cfg, out))
}

fn command_seed(cfg: &RunConfig, command: &Command) -> u64 {
    cfg.master_seed.unwrap_or(match command {
        Command::Synth { .. } => cfg.synth.scene.seed,
        Command::Estimate { .. } => cfg.estimate.seed,
        Command::Detect { .. } => cfg.detect.calibration.seed,
        Command::Eval => cfg.eval.sweep.as_ref().map_or(0, |s| s.seed),
        Command::CfarCalibrate => cfg.cfar_calibrate.noise.seed,
    })
}

pub fn run(cli: &Cli) -> CliResult<Manifest> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::schema("--threads must be at least 1"));
        }
        // Fails only if a pool already exists, as in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (cfg, out) = resolve(cli)?;
    let outcome = match &cli.command {
        Command::Synth { .. } => commands::synth::run(&cfg.synth, &out)?,
        Command::Estimate { .. } => commands::estimate::run(&cfg.estimate, &out)?,
        Command::Detect { .. } => commands::detect::run(&cfg.detect, &out)?,
        Command::Eval => commands::eval::run(&cfg.eval, &out)?,
        Command::CfarCalibrate => commands::calibrate::run(&cfg.cfar_calibrate, &out)?,
    };
    let manifest = Manifest::new(
        cli.command.name(),
        command_seed(&cfg, &cli.command),
        &cfg,
        &out,
        &outcome.files,
        outcome.extra,
    )?;
    manifest.write(&out)?;
    Ok(manifest)
}
