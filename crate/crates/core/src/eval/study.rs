use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::SceneSampler;
use super::stats::{ecdf, kde, linspace, mean, median, silverman_bandwidth};
use crate::detect::segment_skewness;
use crate::error::{Error, Result};
use crate::rd::{segment_at, segment_centred_on, RdMap, RdSegment, SegmentShape};
use crate::rng::{self, Purpose};

/// Segment corpora for the skewness and estimation studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub sampler: SceneSampler,
    pub shape: SegmentShape,
    /// Uniform RD peak SNR interval in dB for target corpora.
    pub snr_db: (f64, f64),
    /// Magnitude of the second target's range offset in the pair corpus.
    pub pair_range_offset_m: (f64, f64),
    /// Half-width of the second target's uniform velocity offset.
    pub pair_velocity_offset_mps: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            sampler: SceneSampler::default(),
            shape: SegmentShape::default(),
            snr_db: (10.0, 25.0),
            pair_range_offset_m: (2.0, 4.0),
            pair_velocity_offset_mps: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    /// Non-overlapping segments tiled over noise-only maps.
    Noise,
    /// One extended target per map, segment centred on its nominal bin.
    SingleTarget,
    /// Two nearby targets per map, segment centred on their midpoint bin.
    TwoTarget,
}

impl CorpusKind {
    pub fn name(self) -> &'static str {
        match self {
            CorpusKind::Noise => "h0",
            CorpusKind::SingleTarget => "h1",
            CorpusKind::TwoTarget => "h1_two_target",
        }
    }

    fn group(self) -> u16 {
        self as u16
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn target_segment(cfg: &CorpusConfig, kind: CorpusKind, seed: u64, index: u32) -> Result<RdSegment> {
    let s = &cfg.sampler;
    let mut rng = rng::substream(seed, rng::stream_id(Purpose::Corpus, kind.group(), index));
    let (r, v) = s.position(&mut rng);
    let snr = uniform(&mut rng, cfg.snr_db);
    let mut truths = vec![s.target(&mut rng, r, v, snr)?];
    let centre = match kind {
        CorpusKind::TwoTarget => {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let r2 = r + sign * uniform(&mut rng, cfg.pair_range_offset_m);
            let h = cfg.pair_velocity_offset_mps;
            let v2 = v + uniform(&mut rng, (-h, h));
            truths.push(s.target(&mut rng, r2, v2, snr)?);
            ((r + r2) / 2.0, (v + v2) / 2.0)
        }
        _ => (r, v),
    };
    let map = s.render(&truths, &mut rng)?;
    Ok(segment_centred_on(&map, s.radar.bin_of(centre.0, centre.1), cfg.shape))
}

/// Draws `n` segments of the given kind. Sample `i` uses stream
/// `(Corpus, kind, i)` of `seed`, so corpora are reproducible and prefixes
/// of larger corpora.
pub fn corpus_segments(cfg: &CorpusConfig, kind: CorpusKind, n: usize, seed: u64) -> Result<Vec<RdSegment>> {
    cfg.sampler.validate()?;
    match kind {
        CorpusKind::Noise => {
            let probe = RdMap::new(
                vec![0.0; cfg.sampler.radar.fast_time_samples * cfg.sampler.radar.chirps_per_frame],
                cfg.sampler.radar.fast_time_samples,
                cfg.sampler.radar.chirps_per_frame,
                1.0,
                1.0,
            )?;
            let origins = tile_origins(&probe, cfg.shape)?;
            let n_maps = n.div_ceil(origins.len());
            let maps: Vec<RdMap> = (0..n_maps as u32)
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng::substream(seed, rng::stream_id(Purpose::Corpus, kind.group(), i));
                    cfg.sampler.render(&[], &mut rng)
                })
                .collect::<Result<_>>()?;
            Ok(maps
                .iter()
                .flat_map(|m| origins.iter().map(|&o| segment_at(m, o, cfg.shape)))
                .take(n)
                .collect())
        }
        _ => (0..n as u32).into_par_iter().map(|i| target_segment(cfg, kind, seed, i)).collect(),
    }
}

/// Non-overlapping tiling of the map by segments.
fn tile_origins(map: &RdMap, shape: SegmentShape) -> Result<Vec<(usize, usize)>> {
    if shape.range_bins > map.range_bins || shape.doppler_bins > map.doppler_bins {
        return Err(Error::param("segment does not fit in the map"));
    }
    Ok((0..=map.range_bins - shape.range_bins)
        .step_by(shape.range_bins)
        .flat_map(|r| (0..=map.doppler_bins - shape.doppler_bins).step_by(shape.doppler_bins).map(move |d| (r, d)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub corpus: CorpusConfig,
    pub n_per_class: usize,
    pub seed: u64,
    /// Threshold whose exceedance fraction is reported per class.
    pub threshold: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_points: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            corpus: CorpusConfig::default(),
            n_per_class: 1000,
            seed: 0,
            threshold: 5.5,
            grid_lo: 0.0,
            grid_hi: 12.0,
            grid_points: 201,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.corpus.sampler.validate()?;
        if self.n_per_class < 2 || self.n_per_class > u32::MAX as usize {
            return Err(Error::param("study needs at least 2 segments per class"));
        }
        if self.grid_points < 2 || !(self.grid_hi > self.grid_lo) {
            return Err(Error::param("study grid needs at least 2 points over a non-empty interval"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Fraction with skewness at or above the study threshold.
    pub frac_at_or_above: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub grid: Vec<f64>,
    /// Silverman bandwidth of the pooled corpus, shared by every class.
    pub bandwidth: f64,
    pub classes: Vec<ClassSummary>,
    pub skews: Vec<Vec<f64>>,
    pub cdf: Vec<Vec<f64>>,
    pub kde: Vec<Vec<f64>>,
}

impl StudyReport {
    pub fn class(&self, kind: CorpusKind) -> Option<&ClassSummary> {
        self.classes.iter().find(|c| c.class == kind.name())
    }
}

pub fn summarize(class: &str, skews: &[f64], threshold: f64) -> ClassSummary {
    ClassSummary {
        class: class.to_string(),
        n: skews.len(),
        mean: mean(skews),
        median: median(skews),
        frac_at_or_above: skews.iter().filter(|&&k| k >= threshold).count() as f64 / skews.len() as f64,
    }
}

/// Skewness CDFs and KDEs for the noise, single-target and two-target
/// corpora.
pub fn skewness_distribution_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let kinds = [CorpusKind::Noise, CorpusKind::SingleTarget, CorpusKind::TwoTarget];
    let mut skews = Vec::new();
    for kind in kinds {
        let segs = corpus_segments(&cfg.corpus, kind, cfg.n_per_class, cfg.seed)?;
        skews.push(segs.iter().map(segment_skewness).collect::<Vec<f64>>());
    }
    let grid = linspace(cfg.grid_lo, cfg.grid_hi, cfg.grid_points);
    let pooled: Vec<f64> = skews.iter().flatten().copied().collect();
    let bandwidth = silverman_bandwidth(&pooled);
    Ok(StudyReport {
        classes: kinds.iter().zip(&skews).map(|(k, s)| summarize(k.name(), s, cfg.threshold)).collect(),
        cdf: skews.iter().map(|s| ecdf(s, &grid)).collect(),
        kde: skews.iter().map(|s| kde(s, &grid, bandwidth)).collect(),
        grid,
        bandwidth,
        skews,
    })
}
