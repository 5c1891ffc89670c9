//! CSV writers. Floats use Rust's shortest round-trip `Display` form, so
//! identical inputs produce byte-identical files.
//!
//! | file | columns |
//! |---|---|
//! | detections | `frame_id, range_bin_lo, range_bin_hi, doppler_bin_lo, doppler_bin_hi, range_m, velocity_mps, skewness, peak_db, centered` |
//! | CFAR cells | `frame_id, range_bin, doppler_bin, range_m, velocity_mps, power_db, threshold_db` |
//! | `sweep_skew.csv` | `snr_db, threshold, trials, failed_trials, truths, tp, pd, pd_lo, pd_hi, noise_segments, fp_segments, pfa_segment, pfa_lo, pfa_hi, mean_detections` |
//! | `sweep_cfar.csv` | `snr_db, design_pfa, scale, trials, failed_trials, truths, tp, pd, pd_lo, pd_hi, noise_cells, fp_cells, pfa_cell, pfa_lo, pfa_hi, pfa_segment_equiv` |
//! | `skew_cdf.csv`, `skew_kde.csv` | `skewness, h0, h1, h1_two_target` |
//! | `skew_summary.csv` | `class, n, mean, median, frac_at_or_above, bandwidth` |

use std::io::Write;
use std::path::{Path, PathBuf};

use super::study::StudyReport;
use super::sweep::SweepReport;
use crate::detect::{CfarHit, Detection};
use crate::error::Result;
use crate::rd::RdMap;

fn f(x: f64) -> String {
    format!("{x}")
}

fn db(x: f64) -> String {
    f(10.0 * x.log10())
}

pub const DETECTION_HEADER: [&str; 10] = [
    "frame_id",
    "range_bin_lo",
    "range_bin_hi",
    "doppler_bin_lo",
    "doppler_bin_hi",
    "range_m",
    "velocity_mps",
    "skewness",
    "peak_db",
    "centered",
];

/// Writes the header when `header` is set, then one row per detection.
/// Range and velocity are those of the peak cell; `peak_db` is the peak on
/// the normalised scale.
pub fn write_detections<W: Write>(
    w: &mut csv::Writer<W>,
    header: bool,
    frame_id: u64,
    map: &RdMap,
    dets: &[Detection],
) -> Result<()> {
    if header {
        w.write_record(DETECTION_HEADER)?;
    }
    for d in dets {
        w.write_record([
            frame_id.to_string(),
            d.rect.range_lo.to_string(),
            d.rect.range_hi().to_string(),
            d.rect.doppler_lo.to_string(),
            d.rect.doppler_hi().to_string(),
            f(map.range_of_bin(d.peak_cell.0 as f64)),
            f(map.velocity_of_bin(d.peak_cell.1 as f64)),
            f(d.skewness),
            db(d.peak_value),
            d.centered.to_string(),
        ])?;
    }
    Ok(())
}

pub const CFAR_HEADER: [&str; 7] =
    ["frame_id", "range_bin", "doppler_bin", "range_m", "velocity_mps", "power_db", "threshold_db"];

pub fn write_cfar_hits<W: Write>(
    w: &mut csv::Writer<W>,
    header: bool,
    frame_id: u64,
    map: &RdMap,
    hits: &[CfarHit],
) -> Result<()> {
    if header {
        w.write_record(CFAR_HEADER)?;
    }
    for h in hits {
        w.write_record([
            frame_id.to_string(),
            h.cell.0.to_string(),
            h.cell.1.to_string(),
            f(map.range_of_bin(h.cell.0 as f64)),
            f(map.velocity_of_bin(h.cell.1 as f64)),
            db(h.power),
            db(h.threshold),
        ])?;
    }
    Ok(())
}

/// Writes `sweep_skew.csv` and `sweep_cfar.csv` into `dir`.
pub fn write_sweep(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let skew_path = dir.join("sweep_skew.csv");
    let mut w = csv::Writer::from_path(&skew_path)?;
    w.write_record([
        "snr_db", "threshold", "trials", "failed_trials", "truths", "tp", "pd", "pd_lo", "pd_hi",
        "noise_segments", "fp_segments", "pfa_segment", "pfa_lo", "pfa_hi", "mean_detections",
    ])?;
    for r in &report.skew {
        w.write_record([
            f(r.snr_db),
            f(r.threshold),
            r.trials.to_string(),
            r.failed_trials.to_string(),
            r.pd.trials.to_string(),
            r.pd.successes.to_string(),
            f(r.pd.estimate),
            f(r.pd.lo),
            f(r.pd.hi),
            r.pfa.trials.to_string(),
            r.pfa.successes.to_string(),
            f(r.pfa.estimate),
            f(r.pfa.lo),
            f(r.pfa.hi),
            f(r.mean_detections),
        ])?;
    }
    w.flush()?;

    let cfar_path = dir.join("sweep_cfar.csv");
    let mut w = csv::Writer::from_path(&cfar_path)?;
    w.write_record([
        "snr_db", "design_pfa", "scale", "trials", "failed_trials", "truths", "tp", "pd", "pd_lo", "pd_hi",
        "noise_cells", "fp_cells", "pfa_cell", "pfa_lo", "pfa_hi", "pfa_segment_equiv",
    ])?;
    for r in &report.cfar {
        w.write_record([
            f(r.snr_db),
            f(r.design_pfa),
            f(r.scale),
            r.trials.to_string(),
            r.failed_trials.to_string(),
            r.pd.trials.to_string(),
            r.pd.successes.to_string(),
            f(r.pd.estimate),
            f(r.pd.lo),
            f(r.pd.hi),
            r.pfa_cell.trials.to_string(),
            r.pfa_cell.successes.to_string(),
            f(r.pfa_cell.estimate),
            f(r.pfa_cell.lo),
            f(r.pfa_cell.hi),
            f(r.pfa_segment_equiv),
        ])?;
    }
    w.flush()?;
    Ok(vec![skew_path, cfar_path])
}

/// Writes `skew_cdf.csv`, `skew_kde.csv` and `skew_summary.csv` into `dir`.
pub fn write_study(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut header = vec!["skewness".to_string()];
    header.extend(report.classes.iter().map(|c| c.class.clone()));
    let mut paths = Vec::new();
    for (name, table) in [("skew_cdf.csv", &report.cdf), ("skew_kde.csv", &report.kde)] {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&header)?;
        for (i, x) in report.grid.iter().enumerate() {
            let mut row = vec![f(*x)];
            row.extend(table.iter().map(|col| f(col[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        paths.push(path);
    }
    let path = dir.join("skew_summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["class", "n", "mean", "median", "frac_at_or_above", "bandwidth"])?;
    for c in &report.classes {
        w.write_record([
            c.class.clone(),
            c.n.to_string(),
            f(c.mean),
            f(c.median),
            f(c.frac_at_or_above),
            f(report.bandwidth),
        ])?;
    }
    w.flush()?;
    paths.push(path);
    Ok(paths)
}
