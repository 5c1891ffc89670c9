use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::SceneSampler;
use super::scoring::{per_segment_pfa, score_cfar_trial, score_trial, segment_touches_truth, TrialScore};
use super::stats::Proportion;
use crate::detect::{
    calibrate_from_noise, detections_from_scores, hits_at_scale, order_statistics, score_segments, CfarCalibration,
    DetectorConfig, OscfarConfig,
};
use crate::error::{Error, Result};
use crate::rng::{self, ChaCha8Rng, Purpose};
use crate::synth::TargetTruth;

/// Monte Carlo grid over SNR × threshold for the skewness pipeline, with
/// OS-CFAR at one or more design Pfa values on the same maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    pub sampler: SceneSampler,
    pub snr_db: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub n_trials: usize,
    /// Inclusive bounds on targets per trial.
    pub n_targets: (usize, usize),
    /// Segment geometry, IoU and recentering settings. Its own threshold is
    /// ignored in favour of `thresholds`.
    pub detector: DetectorConfig,
    pub cfar: OscfarConfig,
    pub cfar_pfas: Vec<f64>,
    pub cfar_calibration_maps: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sampler: SceneSampler::default(),
            snr_db: (-5..=5).map(|k| f64::from(k) * 5.0).collect(),
            thresholds: vec![4.0, 4.75, 5.5, 6.0],
            n_trials: 350,
            n_targets: (2, 6),
            detector: DetectorConfig::default(),
            cfar: OscfarConfig::default(),
            cfar_pfas: vec![1e-4, 1e-3],
            cfar_calibration_maps: 40,
        }
    }
}

impl SweepConfig {
    /// Reduced profile for smoke runs: six SNR points, 20 trials each.
    pub fn quick() -> Self {
        Self {
            snr_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            n_trials: 20,
            cfar_calibration_maps: 12,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        self.detector.validate()?;
        self.cfar.validate()?;
        if self.n_trials == 0 {
            return Err(Error::param("n_trials must be at least 1"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("snr_db must be a non-empty list of finite values"));
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| t.is_nan()) {
            return Err(Error::param("thresholds must be a non-empty list"));
        }
        if self.snr_db.len() > u16::MAX as usize || self.n_trials > u32::MAX as usize {
            return Err(Error::param("grid too large for the stream layout"));
        }
        let (lo, hi) = self.n_targets;
        if lo > hi || hi > 32 {
            return Err(Error::param(format!("n_targets ({lo}, {hi}) must satisfy lo <= hi <= 32")));
        }
        if self.cfar_pfas.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::param("CFAR design Pfa values must lie in (0, 1)"));
        }
        if !self.cfar_pfas.is_empty() && self.cfar_calibration_maps == 0 {
            return Err(Error::param("CFAR calibration needs at least one map"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewRow {
    pub snr_db: f64,
    pub threshold: f64,
    pub trials: u64,
    pub failed_trials: u64,
    pub pd: Proportion,
    /// Per-segment false-alarm rate over noise-only placements.
    pub pfa: Proportion,
    pub mean_detections: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfarRow {
    pub snr_db: f64,
    pub design_pfa: f64,
    pub scale: f64,
    pub trials: u64,
    pub failed_trials: u64,
    pub pd: Proportion,
    pub pfa_cell: Proportion,
    /// `1 - (1 - pfa_cell)^(P·Q)`, comparable with the pipeline's per-segment
    /// rate.
    pub pfa_segment_equiv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub snr_db: f64,
    pub trial: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub calibrations: Vec<CfarCalibration>,
    pub skew: Vec<SkewRow>,
    pub cfar: Vec<CfarRow>,
    pub failures: Vec<TrialFailure>,
}

impl SweepReport {
    pub fn skew_row(&self, snr_db: f64, threshold: f64) -> Option<&SkewRow> {
        self.skew.iter().find(|r| r.snr_db == snr_db && r.threshold == threshold)
    }

    pub fn cfar_row(&self, snr_db: f64, design_pfa: f64) -> Option<&CfarRow> {
        self.cfar.iter().find(|r| r.snr_db == snr_db && r.design_pfa == design_pfa)
    }
}

#[derive(Debug, Clone)]
struct TrialOutcome {
    skew: Vec<TrialScore>,
    detections: Vec<u64>,
    cfar: Vec<TrialScore>,
}

/// Nominal positions whose segment-sized boxes do not overlap.
fn place_targets(cfg: &SweepConfig, rng: &mut ChaCha8Rng, n: usize) -> Result<Vec<(f64, f64)>> {
    let s = &cfg.sampler;
    let shape = cfg.detector.shape;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut bins: Vec<(usize, usize)> = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::param(format!("could not place {n} separated targets in the configured region")));
        }
        let (r, v) = s.position(rng);
        let b = s.radar.bin_of(r, v);
        if bins.iter().all(|o| o.0.abs_diff(b.0) >= shape.range_bins || o.1.abs_diff(b.1) >= shape.doppler_bins) {
            out.push((r, v));
            bins.push(b);
        }
    }
    Ok(out)
}

fn run_trial(cfg: &SweepConfig, scales: &[f64], group: usize, index: usize) -> Result<TrialOutcome> {
    let s = &cfg.sampler;
    let snr = cfg.snr_db[group];
    let mut rng = rng::substream(cfg.seed, rng::stream_id(Purpose::SweepTrial, group as u16, index as u32));
    let n = rng.random_range(cfg.n_targets.0..=cfg.n_targets.1);
    let positions = place_targets(cfg, &mut rng, n)?;
    let truths: Vec<TargetTruth> = positions
        .iter()
        .map(|&(r, v)| s.target(&mut rng, r, v, snr))
        .collect::<Result<_>>()?;
    let map = s.render(&truths, &mut rng)?;
    let bins: Vec<(usize, usize)> = truths.iter().map(|t| s.truth_bin(t)).collect();
    let shape = cfg.detector.shape;

    let scores = score_segments(&map, shape, cfg.detector.stride)?;
    let mut skew = Vec::with_capacity(cfg.thresholds.len());
    let mut detections = Vec::with_capacity(cfg.thresholds.len());
    for &t in &cfg.thresholds {
        let det_cfg = DetectorConfig { threshold: t, ..cfg.detector };
        let dets = detections_from_scores(&map, &scores, &det_cfg);
        skew.push(score_trial(&dets, &scores, t, &bins, shape));
        detections.push(dets.len() as u64);
    }

    let mut cfar = Vec::with_capacity(scales.len());
    if !scales.is_empty() {
        let stats = order_statistics(&map, &cfg.cfar)?;
        let tested: Vec<(usize, usize)> = stats.iter().map(|s| s.0).collect();
        for &scale in scales {
            cfar.push(score_cfar_trial(&hits_at_scale(&stats, scale), &tested, &bins, shape));
        }
    }
    Ok(TrialOutcome { skew, detections, cfar })
}

/// Runs the grid. Trial `i` at SNR index `g` uses stream
/// `(SweepTrial, g, i)`, and results are aggregated in trial order, so the
/// report does not depend on scheduling. Failed trials are listed in
/// `failures` and excluded from the rates.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let s = &cfg.sampler;
    let calibrations = if cfg.cfar_pfas.is_empty() {
        Vec::new()
    } else {
        calibrate_from_noise(
            &s.radar,
            s.window,
            s.noise_sigma,
            &cfg.cfar,
            &cfg.cfar_pfas,
            cfg.cfar_calibration_maps,
            cfg.seed,
        )?
    };
    let scales: Vec<f64> = calibrations.iter().map(|c| c.scale).collect();
    let cells = cfg.detector.shape.cells();

    let mut report = SweepReport { calibrations, skew: Vec::new(), cfar: Vec::new(), failures: Vec::new() };
    for (g, &snr) in cfg.snr_db.iter().enumerate() {
        let outcomes: Vec<Result<TrialOutcome>> =
            (0..cfg.n_trials).into_par_iter().map(|i| run_trial(cfg, &scales, g, i)).collect();
        let mut ok = Vec::new();
        for (i, o) in outcomes.into_iter().enumerate() {
            match o {
                Ok(o) => ok.push(o),
                Err(e) => report.failures.push(TrialFailure { snr_db: snr, trial: i as u64, error: e.to_string() }),
            }
        }
        let trials = ok.len() as u64;
        let failed = cfg.n_trials as u64 - trials;
        for (j, &t) in cfg.thresholds.iter().enumerate() {
            let mut total = TrialScore::default();
            let mut dets = 0;
            for o in &ok {
                total.add(&o.skew[j]);
                dets += o.detections[j];
            }
            report.skew.push(SkewRow {
                snr_db: snr,
                threshold: t,
                trials,
                failed_trials: failed,
                pd: Proportion::new(total.tp, total.tp + total.fn_),
                pfa: Proportion::new(total.fp, total.noise_units),
                mean_detections: if trials == 0 { 0.0 } else { dets as f64 / trials as f64 },
            });
        }
        for (j, c) in report.calibrations.iter().enumerate() {
            let mut total = TrialScore::default();
            for o in &ok {
                total.add(&o.cfar[j]);
            }
            let pfa_cell = Proportion::new(total.fp, total.noise_units);
            report.cfar.push(CfarRow {
                snr_db: snr,
                design_pfa: c.design_pfa,
                scale: c.scale,
                trials,
                failed_trials: failed,
                pd: Proportion::new(total.tp, total.tp + total.fn_),
                pfa_segment_equiv: per_segment_pfa(pfa_cell.estimate, cells),
                pfa_cell,
            });
        }
    }
    Ok(report)
}

/// Single-target runs measuring how many merged detections each target
/// produces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RedundancyConfig {
    pub seed: u64,
    pub sampler: SceneSampler,
    /// Uniform RD peak SNR interval in dB.
    pub snr_db: (f64, f64),
    pub n_trials: usize,
    pub detector: DetectorConfig,
}

impl Default for RedundancyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sampler: SceneSampler::default(),
            snr_db: (10.0, 25.0),
            n_trials: 350,
            detector: DetectorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub trials: u64,
    /// Trials in which exactly one merged detection contains the truth bin.
    pub exactly_one: Proportion,
    /// Trials in which at least one merged detection contains the truth bin.
    pub any_contains: Proportion,
    /// Mean merged detections touching the truth neighbourhood.
    pub mean_detections_per_target: f64,
    /// Mean merged detections anywhere in the map.
    pub mean_detections_per_map: f64,
}

impl RedundancyConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        self.detector.validate()?;
        if self.n_trials == 0 || self.n_trials > u32::MAX as usize {
            return Err(Error::param("n_trials must lie in 1..=u32::MAX"));
        }
        if !(self.snr_db.0.is_finite() && self.snr_db.1.is_finite()) {
            return Err(Error::param("SNR interval must be finite"));
        }
        Ok(())
    }
}

pub fn redundancy_study(cfg: &RedundancyConfig) -> Result<RedundancyReport> {
    cfg.validate()?;
    let s = &cfg.sampler;
    let per_trial: Vec<(bool, bool, u64, u64)> = (0..cfg.n_trials as u32)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::substream(cfg.seed, rng::stream_id(Purpose::Redundancy, 0, i));
            let (r, v) = s.position(&mut rng);
            let (lo, hi) = cfg.snr_db;
            let snr = if hi > lo { rng.random_range(lo..hi) } else { lo };
            let truth = s.target(&mut rng, r, v, snr)?;
            let map = s.render(std::slice::from_ref(&truth), &mut rng)?;
            let bin = s.truth_bin(&truth);
            let dets = crate::detect::detect_map(&map, &cfg.detector, map.max().max(f64::MIN_POSITIVE))?;
            let containing = dets.iter().filter(|d| d.rect.contains(bin)).count();
            let associated = dets
                .iter()
                .filter(|d| segment_touches_truth(d.rect.origin(), cfg.detector.shape, &[bin]))
                .count();
            Ok((containing == 1, containing >= 1, associated as u64, dets.len() as u64))
        })
        .collect::<Result<_>>()?;
    let n = per_trial.len() as u64;
    Ok(RedundancyReport {
        trials: n,
        exactly_one: Proportion::new(per_trial.iter().filter(|t| t.0).count() as u64, n),
        any_contains: Proportion::new(per_trial.iter().filter(|t| t.1).count() as u64, n),
        mean_detections_per_target: per_trial.iter().map(|t| t.2).sum::<u64>() as f64 / n as f64,
        mean_detections_per_map: per_trial.iter().map(|t| t.3).sum::<u64>() as f64 / n as f64,
    })
}
