//! Per-trial bookkeeping for Pd and Pfa.
//!
//! - A truth is detected by the skewness pipeline iff some merged rect
//!   contains its bin, and by OS-CFAR iff some hit cell lies inside the
//!   `P × Q` box centred on its bin.
//! - Noise-only units are those clear of every truth's neighbourhood, the
//!   bins within one segment extent of the truth bin
//!   (`[r - P, r + P] × [d - Q, d + Q]`). For the pipeline a unit is a
//!   stride-1 segment placement that does not touch any neighbourhood; for
//!   OS-CFAR it is a tested cell outside every neighbourhood.

use serde::{Deserialize, Serialize};

use crate::detect::{CfarHit, Detection, SegmentScore};
use crate::rd::SegmentShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrialScore {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Noise-only units declared target.
    pub fp: u64,
    /// Noise-only units evaluated.
    pub noise_units: u64,
}

impl TrialScore {
    pub fn add(&mut self, other: &TrialScore) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.fp += other.fp;
        self.noise_units += other.noise_units;
    }
}

/// How a detection is matched to a truth bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchRule {
    /// The rect contains the truth bin.
    RectContains,
    /// A hit cell lies within the segment-sized box centred on the truth.
    CellInBox,
}

fn in_neighbourhood(cell: (usize, usize), truth: (usize, usize), shape: SegmentShape) -> bool {
    cell.0.abs_diff(truth.0) <= shape.range_bins && cell.1.abs_diff(truth.1) <= shape.doppler_bins
}

/// Whether the segment at `origin` touches any truth neighbourhood.
pub fn segment_touches_truth(origin: (usize, usize), shape: SegmentShape, truths: &[(usize, usize)]) -> bool {
    truths.iter().any(|&(tr, td)| {
        let r_lo = tr.saturating_sub(shape.range_bins);
        let d_lo = td.saturating_sub(shape.doppler_bins);
        let r_hi = tr + shape.range_bins;
        let d_hi = td + shape.doppler_bins;
        origin.0 <= r_hi && origin.0 + shape.range_bins > r_lo && origin.1 <= d_hi && origin.1 + shape.doppler_bins > d_lo
    })
}

/// Scores the skewness pipeline. `scores` are all segment placements of the
/// map; those with `κ ≥ threshold` count as declared.
pub fn score_trial(
    detections: &[Detection],
    scores: &[SegmentScore],
    threshold: f64,
    truths: &[(usize, usize)],
    shape: SegmentShape,
) -> TrialScore {
    let tp = truths.iter().filter(|&&t| detections.iter().any(|d| d.rect.contains(t))).count() as u64;
    let mut out = TrialScore { tp, fn_: truths.len() as u64 - tp, ..TrialScore::default() };
    for s in scores {
        if !segment_touches_truth(s.origin, shape, truths) {
            out.noise_units += 1;
            if s.skewness >= threshold {
                out.fp += 1;
            }
        }
    }
    out
}

/// Scores OS-CFAR hits. `tested` lists every cell the detector evaluated.
pub fn score_cfar_trial(
    hits: &[CfarHit],
    tested: &[(usize, usize)],
    truths: &[(usize, usize)],
    shape: SegmentShape,
) -> TrialScore {
    let (hr, hd) = shape.centre();
    let tp = truths
        .iter()
        .filter(|&&t| hits.iter().any(|h| h.cell.0.abs_diff(t.0) <= hr && h.cell.1.abs_diff(t.1) <= hd))
        .count() as u64;
    let is_noise = |c: (usize, usize)| !truths.iter().any(|&t| in_neighbourhood(c, t, shape));
    TrialScore {
        tp,
        fn_: truths.len() as u64 - tp,
        fp: hits.iter().filter(|h| is_noise(h.cell)).count() as u64,
        noise_units: tested.iter().filter(|&&c| is_noise(c)).count() as u64,
    }
}

/// Probability that at least one of `cells` independent cells fires.
pub fn per_segment_pfa(per_cell: f64, cells: usize) -> f64 {
    1.0 - (1.0 - per_cell).powi(cells as i32)
}
