//! JSON run configuration.
//!
//! Every block is optional and falls back to the library defaults. Unknown
//! keys are rejected. Precedence, highest first: command-line flags, then
//! `master_seed` / `output_dir` in the file, then per-block values, then
//! defaults. A manifest written by any command is itself accepted as a
//! config: its embedded `config` object is used.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rdseg_core::detect::{DetectorConfig, OscfarConfig};
use rdseg_core::eval::{RedundancyConfig, StudyConfig, SweepConfig};
use rdseg_core::inference::{GibbsConfig, MleConfig};
use rdseg_core::rd::{SegmentShape, Stride, Window};
use rdseg_core::synth::{RadarConfig, Scene};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Replaces every block's own seed when set.
    pub master_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub synth: SynthConfig,
    pub estimate: EstimateConfig,
    pub detect: DetectConfig,
    pub eval: EvalConfig,
    pub cfar_calibrate: CalibrateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub scene: Scene,
    pub frames: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { scene: Scene::from_json("{}").expect("empty scene"), frames: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    Mle,
    Gibbs,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub mode: EstimateMode,
    pub inputs: Vec<PathBuf>,
    /// Truth manifest from `synth`; when given, one segment centred on each
    /// target is used instead of tiling the maps.
    pub truth: Option<PathBuf>,
    pub shape: SegmentShape,
    /// Placement step when tiling; defaults to the segment shape.
    pub stride: Option<Stride>,
    /// Normalisation scale; defaults to the maximum over the batch.
    pub reference_max: Option<f64>,
    pub mle: MleConfig,
    pub gibbs: GibbsConfig,
    pub seed: u64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            mode: EstimateMode::Mle,
            inputs: Vec::new(),
            truth: None,
            shape: SegmentShape::default(),
            stride: None,
            reference_max: None,
            mle: MleConfig::default(),
            gibbs: GibbsConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DetectMethod {
    Skew,
    Oscfar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub method: DetectMethod,
    pub inputs: Vec<PathBuf>,
    pub detector: DetectorConfig,
    /// Normalisation scale. Falls back to `reference_max` in `fit`, then to
    /// each map's own maximum (recorded in the manifest).
    pub reference_max: Option<f64>,
    /// Fit JSON from `estimate` carrying a persisted `reference_max`.
    pub fit: Option<PathBuf>,
    pub cfar: OscfarConfig,
    /// Calibration JSON from `cfar-calibrate`, used when `cfar.scale` is
    /// unset. Without it the scale is calibrated in-process from
    /// `calibration`.
    pub cfar_calibration: Option<PathBuf>,
    pub calibration: NoiseCalibration,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            method: DetectMethod::Skew,
            inputs: Vec::new(),
            detector: DetectorConfig::default(),
            reference_max: None,
            fit: None,
            cfar: OscfarConfig::default(),
            cfar_calibration: None,
            calibration: NoiseCalibration::default(),
        }
    }
}

/// Noise model used to calibrate OS-CFAR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseCalibration {
    pub radar: RadarConfig,
    pub window: Window,
    pub noise_sigma: f64,
    pub n_maps: usize,
    pub seed: u64,
}

impl Default for NoiseCalibration {
    fn default() -> Self {
        Self { radar: RadarConfig::default(), window: Window::default(), noise_sigma: 1.0, n_maps: 40, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateConfig {
    pub noise: NoiseCalibration,
    pub cfar: OscfarConfig,
    pub pfas: Vec<f64>,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self { noise: NoiseCalibration::default(), cfar: OscfarConfig::default(), pfas: vec![1e-4, 1e-3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub sweep: Option<SweepConfig>,
    pub study: Option<StudyConfig>,
    pub redundancy: Option<RedundancyConfig>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            sweep: Some(SweepConfig::default()),
            study: Some(StudyConfig::default()),
            redundancy: Some(RedundancyConfig::default()),
        }
    }
}

impl EvalConfig {
    /// The `--quick` profile: six SNR points with 20 trials, 12 calibration
    /// maps, 200 segments per study class and 50 redundancy trials.
    pub fn quicken(&mut self) {
        if let Some(s) = &mut self.sweep {
            let q = SweepConfig::quick();
            s.snr_db = q.snr_db;
            s.n_trials = s.n_trials.min(q.n_trials);
            s.cfar_calibration_maps = s.cfar_calibration_maps.min(q.cfar_calibration_maps);
        }
        if let Some(s) = &mut self.study {
            s.n_per_class = s.n_per_class.min(200);
        }
        if let Some(r) = &mut self.redundancy {
            r.n_trials = r.n_trials.min(50);
        }
    }
}

/// Reads a run config or a manifest's embedded config.
pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| e.context(path.display()))
}

pub fn parse(text: &str) -> CliResult<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let body = match value.get("tool").and_then(|t| t.as_str()) {
        Some("rdseg") => value
            .get("config")
            .cloned()
            .ok_or_else(|| CliError::schema("manifest has no `config` object"))?,
        _ => value,
    };
    Ok(serde_json::from_value(body)?)
}
