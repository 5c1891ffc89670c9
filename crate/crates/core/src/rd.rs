//! Range-Doppler maps and RD segments.
//!
//! Conventions:
//! - the 2D DFT is unnormalised, so `Σ map = N·L · Σ |w·y|²` (Parseval);
//! - rows are range bins `0..N` (bin `i` ↔ `i·Δ_R`), columns are Doppler bins
//!   centred so that column `⌊L/2⌋` is zero velocity and negative velocities
//!   lie to its left;
//! - cells hold `|Y|²` with no further scaling.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::ComplexCube;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
    Hamming,
}

impl Window {
    /// Symmetric window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        if n < 2 {
            return vec![1.0; n];
        }
        let denom = (n - 1) as f64;
        let tau = std::f64::consts::TAU;
        (0..n)
            .map(|i| {
                let c = (tau * i as f64 / denom).cos();
                match self {
                    Window::Rectangular => 1.0,
                    Window::Hann => 0.5 - 0.5 * c,
                    Window::Hamming => 0.54 - 0.46 * c,
                }
            })
            .collect()
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            "hamming" => Ok(Window::Hamming),
            other => Err(Error::param(format!("unknown window `{other}`"))),
        }
    }
}

/// Square-law range-Doppler power map, row-major `range_bins × doppler_bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct RdMap {
    pub power: Vec<f64>,
    pub range_bins: usize,
    pub doppler_bins: usize,
    pub range_resolution_m: f64,
    pub velocity_resolution_mps: f64,
}

impl RdMap {
    pub fn new(
        power: Vec<f64>,
        range_bins: usize,
        doppler_bins: usize,
        range_resolution_m: f64,
        velocity_resolution_mps: f64,
    ) -> Result<Self> {
        if power.len() != range_bins * doppler_bins {
            return Err(Error::param(format!(
                "map data has {} cells, expected {range_bins}x{doppler_bins}",
                power.len()
            )));
        }
        if !(range_resolution_m > 0.0 && velocity_resolution_mps > 0.0) {
            return Err(Error::param("map resolutions must be positive"));
        }
        if let Some(bad) = power.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::param(format!("map cell {bad} is not a finite non-negative power")));
        }
        Ok(Self { power, range_bins, doppler_bins, range_resolution_m, velocity_resolution_mps })
    }

    #[inline]
    pub fn get(&self, range_bin: usize, doppler_bin: usize) -> f64 {
        self.power[range_bin * self.doppler_bins + doppler_bin]
    }

    pub fn row(&self, range_bin: usize) -> &[f64] {
        &self.power[range_bin * self.doppler_bins..(range_bin + 1) * self.doppler_bins]
    }

    pub fn max(&self) -> f64 {
        self.power.iter().copied().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.power.iter().enumerate() {
            if *v > self.power[best] {
                best = i;
            }
        }
        (best / self.doppler_bins, best % self.doppler_bins)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { power: self.power.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    pub fn range_of_bin(&self, range_bin: f64) -> f64 {
        range_bin * self.range_resolution_m
    }

    pub fn velocity_of_bin(&self, doppler_bin: f64) -> f64 {
        (doppler_bin - (self.doppler_bins / 2) as f64) * self.velocity_resolution_mps
    }
}

/// Windowed 2D DFT followed by square-law detection.
pub fn compute_rd_map(cube: &ComplexCube, window: Window) -> Result<RdMap> {
    let n_fast = cube.fast_time_samples();
    let n_slow = cube.chirps_per_frame();
    if n_fast < 2 || n_slow < 2 {
        return Err(Error::param(format!("cube must be at least 2x2, got {n_fast}x{n_slow}")));
    }
    let w_fast = window.coefficients(n_fast);
    let w_slow = window.coefficients(n_slow);

    let mut planner = FftPlanner::<f64>::new();
    let fft_slow = planner.plan_fft_forward(n_slow);
    let fft_fast = planner.plan_fft_forward(n_fast);

    // Slow-time transform in place, row by row.
    let mut rows: Vec<Complex64> = cube
        .samples
        .chunks_exact(n_slow)
        .zip(&w_fast)
        .flat_map(|(row, wf)| row.iter().zip(&w_slow).map(move |(y, ws)| y * (wf * ws)))
        .collect();
    fft_slow.process(&mut rows);

    // Fast-time transform on the transpose.
    let mut cols = vec![Complex64::new(0.0, 0.0); n_fast * n_slow];
    for n in 0..n_fast {
        for l in 0..n_slow {
            cols[l * n_fast + n] = rows[n * n_slow + l];
        }
    }
    fft_fast.process(&mut cols);

    let centre = n_slow / 2;
    let mut power = vec![0.0; n_fast * n_slow];
    for n in 0..n_fast {
        for j in 0..n_slow {
            // column j holds Doppler index k = j - centre (mod L)
            let k = (j + n_slow - centre) % n_slow;
            power[n * n_slow + j] = cols[k * n_fast + n].norm_sqr();
        }
    }

    Ok(RdMap {
        power,
        range_bins: n_fast,
        doppler_bins: n_slow,
        range_resolution_m: cube.config.range_resolution_m(),
        velocity_resolution_mps: cube.config.velocity_resolution_mps(),
    })
}

/// Segment size in bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentShape {
    pub range_bins: usize,
    pub doppler_bins: usize,
}

impl Default for SegmentShape {
    /// 17 × 7 bins, about 6 m × 2.1 m/s at the default radar settings.
    fn default() -> Self {
        Self { range_bins: 17, doppler_bins: 7 }
    }
}

impl SegmentShape {
    pub fn cells(&self) -> usize {
        self.range_bins * self.doppler_bins
    }

    /// Offset of the centre cell from the segment origin.
    pub fn centre(&self) -> (usize, usize) {
        (self.range_bins / 2, self.doppler_bins / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stride {
    pub range: usize,
    pub doppler: usize,
}

impl Default for Stride {
    fn default() -> Self {
        Self { range: 1, doppler: 1 }
    }
}

/// A `P × Q` copy of map cells with the map coordinates of its top-left cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RdSegment {
    pub origin: (usize, usize),
    pub shape: SegmentShape,
    pub values: Vec<f64>,
}

impl RdSegment {
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.values[p * self.shape.doppler_bins + q]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn check_geometry(map: &RdMap, shape: SegmentShape, stride: Stride) -> Result<()> {
    if shape.range_bins == 0 || shape.doppler_bins == 0 {
        return Err(Error::param("segment dimensions must be positive"));
    }
    if shape.range_bins > map.range_bins || shape.doppler_bins > map.doppler_bins {
        return Err(Error::param(format!(
            "segment {}x{} does not fit in map {}x{}",
            shape.range_bins, shape.doppler_bins, map.range_bins, map.doppler_bins
        )));
    }
    if stride.range == 0 || stride.doppler == 0 {
        return Err(Error::param("stride must be at least (1, 1)"));
    }
    Ok(())
}

/// Origins of every in-bounds placement, row-major. Windows never wrap.
pub fn segment_origins(map: &RdMap, shape: SegmentShape, stride: Stride) -> Result<Vec<(usize, usize)>> {
    check_geometry(map, shape, stride)?;
    let rs = (0..=map.range_bins - shape.range_bins).step_by(stride.range);
    Ok(rs
        .flat_map(|r| (0..=map.doppler_bins - shape.doppler_bins).step_by(stride.doppler).map(move |d| (r, d)))
        .collect())
}

pub fn segment_at(map: &RdMap, origin: (usize, usize), shape: SegmentShape) -> RdSegment {
    let mut values = Vec::with_capacity(shape.cells());
    for r in origin.0..origin.0 + shape.range_bins {
        values.extend_from_slice(&map.row(r)[origin.1..origin.1 + shape.doppler_bins]);
    }
    RdSegment { origin, shape, values }
}

/// Segment whose centre cell is `bin`, shifted inward where it would leave
/// the map. The shape must fit in the map.
pub fn segment_centred_on(map: &RdMap, bin: (usize, usize), shape: SegmentShape) -> RdSegment {
    let (cr, cq) = shape.centre();
    let origin = (
        bin.0.saturating_sub(cr).min(map.range_bins - shape.range_bins),
        bin.1.saturating_sub(cq).min(map.doppler_bins - shape.doppler_bins),
    );
    segment_at(map, origin, shape)
}

pub fn extract_segments(map: &RdMap, shape: SegmentShape, stride: Stride) -> Result<Vec<RdSegment>> {
    Ok(segment_origins(map, shape, stride)?
        .into_iter()
        .map(|o| segment_at(map, o, shape))
        .collect())
}

/// Largest cell over a batch of segments, the usual `reference_max`.
pub fn batch_max(segments: &[RdSegment]) -> f64 {
    segments.iter().map(RdSegment::max).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedBatch {
    pub segments: Vec<RdSegment>,
    pub reference_max: f64,
}

/// Divides every cell by `reference_max`.
pub fn global_normalize(segments: &[RdSegment], reference_max: f64) -> Result<NormalizedBatch> {
    if !(reference_max > 0.0 && reference_max.is_finite()) {
        return Err(Error::param(format!("reference_max must be positive and finite, got {reference_max}")));
    }
    let inv = 1.0 / reference_max;
    let segments = segments
        .iter()
        .map(|s| RdSegment { values: s.values.iter().map(|v| v * inv).collect(), ..s.clone() })
        .collect();
    Ok(NormalizedBatch { segments, reference_max })
}
