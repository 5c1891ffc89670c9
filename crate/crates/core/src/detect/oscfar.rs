//! Two-dimensional ordered-statistic CFAR.
//!
//! Each interior cell under test (CUT) is compared against `T_os · X_(k)`,
//! where `X_(k)` is the k-th smallest power in the reference ring: the
//! `window` rectangle centred on the CUT minus the guard rectangle. Cells
//! whose window would leave the map are not tested.
//!
//! The scale `T_os` comes from one of two routes:
//! - [`calibrate_scale`] takes the `(1 - pfa)` empirical quantile of
//!   `CUT / X_(k)` over noise-only maps. This accounts for the correlation
//!   the window taper introduces between neighbouring cells.
//! - [`analytic_scale`] inverts the closed form for i.i.d. exponential
//!   cells, `Pfa = Π_{i<k} (N - i) / (N - i + T)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rd::{compute_rd_map, RdMap, Window};
use crate::rng::{self, Purpose};
use crate::synth::{synthesize_cube, RadarConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscfarConfig {
    /// Full window extent (range, Doppler), odd on both axes.
    pub window: (usize, usize),
    /// Guard half-widths (range, Doppler) around the CUT.
    pub guard: (usize, usize),
    /// 1-based order statistic.
    pub k: usize,
    pub design_pfa: f64,
    /// Threshold multiplier; `None` until calibrated.
    pub scale: Option<f64>,
}

impl Default for OscfarConfig {
    /// Window matched to the 17 × 7 segment, 5 × 3 guard block, 104 reference
    /// cells and k at three quarters of them.
    fn default() -> Self {
        Self { window: (17, 7), guard: (2, 1), k: 78, design_pfa: 1e-4, scale: None }
    }
}

impl OscfarConfig {
    pub fn half_window(&self) -> (usize, usize) {
        (self.window.0 / 2, self.window.1 / 2)
    }

    pub fn reference_cells(&self) -> usize {
        let guard = (2 * self.guard.0 + 1) * (2 * self.guard.1 + 1);
        (self.window.0 * self.window.1).saturating_sub(guard)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window.0 % 2 == 0 || self.window.1 % 2 == 0 {
            return Err(Error::param(format!("CFAR window {:?} must be odd on both axes", self.window)));
        }
        let (hr, hd) = self.half_window();
        if self.guard.0 > hr || self.guard.1 > hd {
            return Err(Error::param(format!("guard {:?} exceeds half-window ({hr}, {hd})", self.guard)));
        }
        let n = self.reference_cells();
        if n == 0 {
            return Err(Error::param("CFAR geometry leaves no reference cells"));
        }
        if self.k == 0 || self.k > n {
            return Err(Error::param(format!("order statistic k = {} must lie in 1..={n}", self.k)));
        }
        if !(self.design_pfa > 0.0 && self.design_pfa < 1.0) {
            return Err(Error::param(format!("design Pfa must lie in (0, 1), got {}", self.design_pfa)));
        }
        if let Some(s) = self.scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param(format!("CFAR scale must be positive, got {s}")));
            }
        }
        Ok(())
    }

    fn check_fits(&self, map: &RdMap) -> Result<()> {
        if self.window.0 > map.range_bins || self.window.1 > map.doppler_bins {
            return Err(Error::param(format!(
                "CFAR window {:?} does not fit in a {}x{} map",
                self.window, map.range_bins, map.doppler_bins
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfarHit {
    pub cell: (usize, usize),
    pub power: f64,
    pub threshold: f64,
}

/// Per tested cell: `(cell, CUT power, k-th order statistic)`, row-major.
pub fn order_statistics(map: &RdMap, config: &OscfarConfig) -> Result<Vec<((usize, usize), f64, f64)>> {
    config.validate()?;
    config.check_fits(map)?;
    let (hr, hd) = config.half_window();
    let (gr, gd) = config.guard;
    let rows: Vec<usize> = (hr..map.range_bins - hr).collect();
    let per_row: Vec<Vec<_>> = rows
        .par_iter()
        .map(|&r| {
            let mut buf = Vec::with_capacity(config.reference_cells());
            let mut out = Vec::with_capacity(map.doppler_bins);
            for d in hd..map.doppler_bins - hd {
                buf.clear();
                for rr in r - hr..=r + hr {
                    let row = map.row(rr);
                    let in_guard_row = rr.abs_diff(r) <= gr;
                    for (dd, &v) in row.iter().enumerate().take(d + hd + 1).skip(d - hd) {
                        if !(in_guard_row && dd.abs_diff(d) <= gd) {
                            buf.push(v);
                        }
                    }
                }
                let (_, kth, _) = buf.select_nth_unstable_by(config.k - 1, f64::total_cmp);
                out.push(((r, d), map.get(r, d), *kth));
            }
            out
        })
        .collect();
    Ok(per_row.into_iter().flatten().collect())
}

/// Cells with `power > scale · X_(k)`. Strict, so an all-zero map yields
/// nothing.
pub fn oscfar_detect(map: &RdMap, config: &OscfarConfig) -> Result<Vec<CfarHit>> {
    let scale = config
        .scale
        .ok_or_else(|| Error::param("OS-CFAR scale is not calibrated"))?;
    Ok(hits_at_scale(&order_statistics(map, config)?, scale))
}

pub fn hits_at_scale(stats: &[((usize, usize), f64, f64)], scale: f64) -> Vec<CfarHit> {
    stats
        .iter()
        .filter_map(|&(cell, power, kth)| {
            let threshold = scale * kth;
            (power > threshold).then_some(CfarHit { cell, power, threshold })
        })
        .collect()
}

/// `Pfa(T)` for i.i.d. exponential cells with `n` references and order `k`.
pub fn analytic_pfa(n: usize, k: usize, scale: f64) -> f64 {
    (0..k).map(|i| (n - i) as f64 / ((n - i) as f64 + scale)).product()
}

/// Inverts [`analytic_pfa`] by bisection.
pub fn analytic_scale(n: usize, k: usize, pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) || k == 0 || k > n {
        return Err(Error::param(format!("analytic scale needs 0 < pfa < 1 and 1 <= k <= n, got {pfa}, {k}, {n}")));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while analytic_pfa(n, k, hi) > pfa {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::param("analytic CFAR scale does not exist for this Pfa"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if analytic_pfa(n, k, mid) > pfa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `CUT / X_(k)` for every tested cell. Cells whose order statistic is zero
/// are skipped.
pub fn cfar_ratios(map: &RdMap, config: &OscfarConfig) -> Result<Vec<f64>> {
    Ok(order_statistics(map, config)?
        .into_iter()
        .filter(|s| s.2 > 0.0)
        .map(|(_, p, k)| p / k)
        .collect())
}

/// Smallest `T` such that at most `⌊pfa · n⌋` ratios exceed it.
pub fn ratio_quantile(ratios: &mut [f64], pfa: f64) -> Result<f64> {
    let n = ratios.len();
    let m = (pfa * n as f64).floor() as usize;
    if m == 0 || m >= n {
        return Err(Error::param(format!(
            "{n} noise cells are too few to calibrate Pfa {pfa}; need at least {}",
            (1.0 / pfa).ceil()
        )));
    }
    let (_, t, _) = ratios.select_nth_unstable_by(n - m - 1, f64::total_cmp);
    Ok(*t)
}

/// Monte Carlo scale for one design Pfa from pooled noise-map ratios.
pub fn calibrate_scale(noise_maps: &[RdMap], config: &OscfarConfig, pfa: f64) -> Result<f64> {
    let mut ratios = Vec::new();
    for m in noise_maps {
        ratios.extend(cfar_ratios(m, config)?);
    }
    ratio_quantile(&mut ratios, pfa)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfarCalibration {
    pub design_pfa: f64,
    pub scale: f64,
    pub analytic_scale: f64,
    pub n_maps: usize,
    pub n_cells: usize,
    pub seed: u64,
}

/// Noise-only RD map `index` of the calibration stream for `seed`.
pub fn calibration_noise_map(
    radar: &RadarConfig,
    window: Window,
    noise_sigma: f64,
    seed: u64,
    index: u32,
) -> Result<RdMap> {
    let mut rng = rng::substream(seed, rng::stream_id(Purpose::CfarCalibration, 0, index));
    compute_rd_map(&synthesize_cube(radar, &[], noise_sigma, &mut rng)?, window)
}

/// Generates `n_maps` noise maps once and calibrates every requested Pfa.
pub fn calibrate_from_noise(
    radar: &RadarConfig,
    window: Window,
    noise_sigma: f64,
    config: &OscfarConfig,
    pfas: &[f64],
    n_maps: usize,
    seed: u64,
) -> Result<Vec<CfarCalibration>> {
    config.validate()?;
    if n_maps == 0 {
        return Err(Error::param("CFAR calibration needs at least one noise map"));
    }
    let mut ratios = Vec::new();
    for i in 0..n_maps {
        let map = calibration_noise_map(radar, window, noise_sigma, seed, i as u32)?;
        ratios.extend(cfar_ratios(&map, config)?);
    }
    pfas.iter()
        .map(|&pfa| {
            let scale = ratio_quantile(&mut ratios, pfa)?;
            Ok(CfarCalibration {
                design_pfa: pfa,
                scale,
                analytic_scale: analytic_scale(config.reference_cells(), config.k, pfa)?,
                n_maps,
                n_cells: ratios.len(),
                seed,
            })
        })
        .collect()
}
