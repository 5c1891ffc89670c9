use std::path::Path;

use rdseg_core::eval::{redundancy_study, run_sweep, skewness_distribution_study, write_study, write_sweep};

use super::{create_dir, file_name, Outcome};
use crate::config::EvalConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::write_json;

pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.json";
pub const REDUNDANCY_FILE: &str = "redundancy.json";

/// Runs every configured study. All configs are validated before any trial
/// starts.
pub fn run(cfg: &EvalConfig, out: &Path) -> CliResult<Outcome> {
    if cfg.sweep.is_none() && cfg.study.is_none() && cfg.redundancy.is_none() {
        return Err(CliError::schema("eval has nothing to run: sweep, study and redundancy are all null"));
    }
    if let Some(s) = &cfg.sweep {
        s.validate()?;
    }
    if let Some(r) = &cfg.redundancy {
        r.validate()?;
    }
    if let Some(s) = &cfg.study {
        s.validate()?;
    }

    let sweep = cfg.sweep.as_ref().map(run_sweep).transpose()?;
    let study = cfg.study.as_ref().map(skewness_distribution_study).transpose()?;
    let redundancy = cfg.redundancy.as_ref().map(redundancy_study).transpose()?;

    create_dir(out)?;
    let mut paths = Vec::new();
    if let Some(r) = &sweep {
        paths.extend(write_sweep(r, out)?);
        let summary = serde_json::json!({ "calibrations": r.calibrations, "failures": r.failures });
        write_json(&out.join(SWEEP_SUMMARY_FILE), &summary)?;
        paths.push(out.join(SWEEP_SUMMARY_FILE));
    }
    if let Some(r) = &study {
        paths.extend(write_study(r, out)?);
    }
    if let Some(r) = &redundancy {
        write_json(&out.join(REDUNDANCY_FILE), r)?;
        paths.push(out.join(REDUNDANCY_FILE));
    }
    Ok(Outcome {
        files: paths.iter().map(|p| file_name(p)).collect(),
        extra: serde_json::json!({
            "failed_trials": sweep.as_ref().map(|r| r.failures.len()),
        }),
    })
}
