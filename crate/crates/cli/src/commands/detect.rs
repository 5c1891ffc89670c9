use std::path::Path;

use rdseg_core::detect::{calibrate_from_noise, detect_map, oscfar_detect, CfarCalibration, OscfarConfig};
use rdseg_core::eval::{write_cfar_hits, write_detections};
use rdseg_core::inference::FitReport;
use rdseg_core::RdMap;

use super::{create_dir, file_name, load_map, read_json, Outcome};
use crate::config::{DetectConfig, DetectMethod};
use crate::error::{CliError, CliResult};

pub const DETECTIONS_FILE: &str = "detections.csv";
pub const CFAR_FILE: &str = "cfar_detections.csv";

fn load_inputs(cfg: &DetectConfig) -> CliResult<Vec<RdMap>> {
    if cfg.inputs.is_empty() {
        return Err(CliError::schema("detect needs at least one input map"));
    }
    cfg.inputs.iter().map(|p| load_map(p)).collect()
}

pub fn run(cfg: &DetectConfig, out: &Path) -> CliResult<Outcome> {
    match cfg.method {
        DetectMethod::Skew => skew(cfg, out),
        DetectMethod::Oscfar => oscfar(cfg, out),
    }
}

fn skew(cfg: &DetectConfig, out: &Path) -> CliResult<Outcome> {
    cfg.detector.validate()?;
    let (reference, source) = match (cfg.reference_max, &cfg.fit) {
        (Some(r), _) => (Some(r), "config"),
        (None, Some(p)) => (Some(read_json::<FitReport>(p)?.reference_max), "fit"),
        (None, None) => (None, "per_map_max"),
    };
    let maps = load_inputs(cfg)?;
    let mut rows = Vec::with_capacity(maps.len());
    for m in &maps {
        rows.push(detect_map(m, &cfg.detector, reference.unwrap_or_else(|| m.max()))?);
    }

    create_dir(out)?;
    let mut w = csv::Writer::from_path(out.join(DETECTIONS_FILE))?;
    for (i, (m, dets)) in maps.iter().zip(&rows).enumerate() {
        write_detections(&mut w, i == 0, i as u64, m, dets)?;
    }
    w.flush()?;
    Ok(Outcome {
        files: vec![DETECTIONS_FILE.into()],
        extra: serde_json::json!({
            "frames": cfg.inputs.iter().map(|p| file_name(p)).collect::<Vec<_>>(),
            "reference_max_source": source,
            "reference_max": reference,
            "detections": rows.iter().map(Vec::len).collect::<Vec<_>>(),
        }),
    })
}

/// Scale from the config, else the calibration file, else in-process Monte
/// Carlo calibration on the configured noise model.
fn resolve_scale(cfg: &DetectConfig) -> CliResult<(f64, &'static str)> {
    if let Some(s) = cfg.cfar.scale {
        return Ok((s, "config"));
    }
    let design = cfg.cfar.design_pfa;
    if let Some(p) = &cfg.cfar_calibration {
        let table: Vec<CfarCalibration> = read_json(p)?;
        return table
            .iter()
            .find(|c| c.design_pfa == design)
            .map(|c| (c.scale, "calibration_file"))
            .ok_or_else(|| CliError::schema(format!("{}: no entry for design Pfa {design}", p.display())));
    }
    let n = &cfg.calibration;
    let cal = calibrate_from_noise(&n.radar, n.window, n.noise_sigma, &cfg.cfar, &[design], n.n_maps, n.seed)?;
    Ok((cal[0].scale, "monte_carlo"))
}

fn oscfar(cfg: &DetectConfig, out: &Path) -> CliResult<Outcome> {
    cfg.cfar.validate()?;
    let maps = load_inputs(cfg)?;
    let (scale, source) = resolve_scale(cfg)?;
    let ocfg = OscfarConfig { scale: Some(scale), ..cfg.cfar };
    let mut rows = Vec::with_capacity(maps.len());
    for m in &maps {
        rows.push(oscfar_detect(m, &ocfg)?);
    }

    create_dir(out)?;
    let mut w = csv::Writer::from_path(out.join(CFAR_FILE))?;
    for (i, (m, hits)) in maps.iter().zip(&rows).enumerate() {
        write_cfar_hits(&mut w, i == 0, i as u64, m, hits)?;
    }
    w.flush()?;
    Ok(Outcome {
        files: vec![CFAR_FILE.into()],
        extra: serde_json::json!({
            "frames": cfg.inputs.iter().map(|p| file_name(p)).collect::<Vec<_>>(),
            "design_pfa": cfg.cfar.design_pfa,
            "scale": scale,
            "scale_source": source,
            "hits": rows.iter().map(Vec::len).collect::<Vec<_>>(),
        }),
    })
}
