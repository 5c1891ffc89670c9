use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::skew::from_moments;
use crate::error::{Error, Result};
use crate::rd::{segment_origins, RdMap, SegmentShape, Stride};

/// Integer bin rectangle, half-open on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    pub range_lo: usize,
    pub doppler_lo: usize,
    pub range_len: usize,
    pub doppler_len: usize,
}

impl Rect {
    pub fn new(origin: (usize, usize), shape: SegmentShape) -> Self {
        Self { range_lo: origin.0, doppler_lo: origin.1, range_len: shape.range_bins, doppler_len: shape.doppler_bins }
    }

    pub fn origin(&self) -> (usize, usize) {
        (self.range_lo, self.doppler_lo)
    }

    /// Last range bin, inclusive.
    pub fn range_hi(&self) -> usize {
        self.range_lo + self.range_len - 1
    }

    /// Last Doppler bin, inclusive.
    pub fn doppler_hi(&self) -> usize {
        self.doppler_lo + self.doppler_len - 1
    }

    pub fn area(&self) -> usize {
        self.range_len * self.doppler_len
    }

    pub fn contains(&self, bin: (usize, usize)) -> bool {
        (self.range_lo..self.range_lo + self.range_len).contains(&bin.0)
            && (self.doppler_lo..self.doppler_lo + self.doppler_len).contains(&bin.1)
    }

    pub fn intersection_area(&self, other: &Rect) -> usize {
        let overlap = |a0: usize, al: usize, b0: usize, bl: usize| (a0 + al).min(b0 + bl).saturating_sub(a0.max(b0));
        overlap(self.range_lo, self.range_len, other.range_lo, other.range_len)
            * overlap(self.doppler_lo, self.doppler_len, other.doppler_lo, other.doppler_len)
    }
}

pub fn iou(a: &Rect, b: &Rect) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

/// Skewness and peak of one segment placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentScore {
    pub origin: (usize, usize),
    pub skewness: f64,
    /// Map coordinates of the largest cell; first in row-major order on ties.
    pub peak_cell: (usize, usize),
    pub peak_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub rect: Rect,
    pub skewness: f64,
    pub peak_cell: (usize, usize),
    pub peak_value: f64,
    /// False when map edges kept the peak off the rect centre.
    pub centered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub shape: SegmentShape,
    pub stride: Stride,
    pub threshold: f64,
    pub iou_threshold: f64,
    /// Upper bound on hill-climbing moves while recentering one segment.
    pub max_recenter_steps: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            shape: SegmentShape::default(),
            stride: Stride::default(),
            threshold: 5.5,
            iou_threshold: 0.4,
            max_recenter_steps: 64,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold.is_nan() || self.threshold == f64::INFINITY {
            return Err(Error::param(format!("threshold must be finite or -inf, got {}", self.threshold)));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::param(format!("IoU threshold must lie in (0, 1], got {}", self.iou_threshold)));
        }
        if self.shape.cells() < 2 {
            return Err(Error::param("segments need at least 2 cells"));
        }
        Ok(())
    }
}

/// Skewness and peak of the segment at `origin`, read straight from the map.
pub fn score_at(map: &RdMap, origin: (usize, usize), shape: SegmentShape) -> SegmentScore {
    let (p, q) = (shape.range_bins, shape.doppler_bins);
    let n = (p * q) as f64;
    let rows = origin.0..origin.0 + p;
    let cols = origin.1..origin.1 + q;
    let mut sum = 0.0;
    let mut peak = f64::NEG_INFINITY;
    let mut peak_cell = origin;
    for r in rows.clone() {
        for (j, &v) in map.row(r)[cols.clone()].iter().enumerate() {
            sum += v;
            if v > peak {
                peak = v;
                peak_cell = (r, origin.1 + j);
            }
        }
    }
    let mean = sum / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for r in rows {
        for &v in &map.row(r)[cols.clone()] {
            let d = v - mean;
            m2 += d * d;
            m3 += d * d * d;
        }
    }
    m2 /= n;
    m3 /= n;
    SegmentScore { origin, skewness: from_moments(mean, m2, m3), peak_cell, peak_value: peak }
}

/// Scores every placement in row-major origin order.
pub fn score_segments(map: &RdMap, shape: SegmentShape, stride: Stride) -> Result<Vec<SegmentScore>> {
    let origins = segment_origins(map, shape, stride)?;
    Ok(origins.par_iter().map(|&o| score_at(map, o, shape)).collect())
}

fn clipped_origin(map: &RdMap, peak: (usize, usize), shape: SegmentShape) -> (usize, usize) {
    let (cr, cq) = shape.centre();
    (
        peak.0.saturating_sub(cr).min(map.range_bins - shape.range_bins),
        peak.1.saturating_sub(cq).min(map.doppler_bins - shape.doppler_bins),
    )
}

/// Moves a segment until its maximum cell sits at the centre bin, clipping
/// at the map edges. Each move keeps the previous peak inside the segment,
/// so the peak never decreases.
pub fn recenter(map: &RdMap, origin: (usize, usize), shape: SegmentShape, max_steps: usize) -> Detection {
    let mut score = score_at(map, origin, shape);
    for _ in 0..max_steps {
        let next = clipped_origin(map, score.peak_cell, shape);
        if next == score.origin {
            break;
        }
        score = score_at(map, next, shape);
    }
    let (cr, cq) = shape.centre();
    let centered = score.peak_cell == (score.origin.0 + cr, score.origin.1 + cq);
    Detection {
        rect: Rect::new(score.origin, shape),
        skewness: score.skewness,
        peak_cell: score.peak_cell,
        peak_value: score.peak_value,
        centered,
    }
}

/// Greedy non-maximum suppression: visit candidates by descending peak
/// (ties by rect origin) and keep one iff its IoU with every kept detection
/// is below `iou_threshold`.
pub fn merge_detections(cands: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<&Detection> = cands.iter().collect();
    order.sort_by(|a, b| b.peak_value.total_cmp(&a.peak_value).then(a.rect.cmp(&b.rect)));
    let mut kept: Vec<Detection> = Vec::new();
    for c in order {
        if kept.iter().all(|k| iou(&k.rect, &c.rect) < iou_threshold) {
            kept.push(*c);
        }
    }
    kept
}

/// Thresholds precomputed scores (`κ ≥ T`), recenters the survivors and
/// merges them.
pub fn detections_from_scores(map: &RdMap, scores: &[SegmentScore], config: &DetectorConfig) -> Vec<Detection> {
    let cands: Vec<Detection> = scores
        .iter()
        .filter(|s| s.skewness >= config.threshold)
        .map(|s| recenter(map, s.origin, config.shape, config.max_recenter_steps))
        .collect();
    merge_detections(&cands, config.iou_threshold)
}

/// Full pipeline on one map. Cells are divided by `reference_max` first, so
/// reported peaks are on the normalised scale; skewness is unaffected.
pub fn detect_map(map: &RdMap, config: &DetectorConfig, reference_max: f64) -> Result<Vec<Detection>> {
    config.validate()?;
    if !(reference_max > 0.0 && reference_max.is_finite()) {
        return Err(Error::param(format!("reference_max must be positive and finite, got {reference_max}")));
    }
    let normalized = map.scaled(1.0 / reference_max);
    let scores = score_segments(&normalized, config.shape, config.stride)?;
    Ok(detections_from_scores(&normalized, &scores, config))
}
