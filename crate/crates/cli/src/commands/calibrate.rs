use std::path::Path;

use rdseg_core::detect::calibrate_from_noise;

use super::{create_dir, Outcome};
use crate::config::CalibrateConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::write_json;

pub const CALIBRATION_FILE: &str = "cfar_calibration.json";

pub fn run(cfg: &CalibrateConfig, out: &Path) -> CliResult<Outcome> {
    if cfg.pfas.is_empty() {
        return Err(CliError::schema("cfar_calibrate.pfas is empty"));
    }
    let n = &cfg.noise;
    n.radar.validate()?;
    let table = calibrate_from_noise(&n.radar, n.window, n.noise_sigma, &cfg.cfar, &cfg.pfas, n.n_maps, n.seed)?;
    create_dir(out)?;
    write_json(&out.join(CALIBRATION_FILE), &table)?;
    Ok(Outcome { files: vec![CALIBRATION_FILE.into()], extra: serde_json::Value::Null })
}
