use std::path::Path;

use serde::{Deserialize, Serialize};

use rdseg_core::rdm::save_rdm;
use rdseg_core::synth::{RadarConfig, TargetTruth};
use rdseg_core::{compute_rd_map, Window};

use super::{create_dir, Outcome};
use crate::config::SynthConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::write_json;

pub const TRUTH_FILE: &str = "truth.json";

/// Ground truth written by `synth` and read back by `estimate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthManifest {
    pub seed: u64,
    pub radar: RadarConfig,
    pub window: Window,
    pub noise_sigma: f64,
    pub range_resolution_m: f64,
    pub velocity_resolution_mps: f64,
    pub frames: Vec<FrameTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub frame: u32,
    /// Map file, relative to the truth manifest.
    pub file: String,
    pub targets: Vec<TargetRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub range_bin: usize,
    pub doppler_bin: usize,
    pub truth: TargetTruth,
}

pub fn frame_file(frame: u32) -> String {
    format!("frame_{frame:04}.rdm")
}

pub fn run(cfg: &SynthConfig, out: &Path) -> CliResult<Outcome> {
    let scene = &cfg.scene;
    scene.radar.validate()?;
    if cfg.frames == 0 {
        return Err(CliError::schema("synth.frames must be at least 1"));
    }
    let mut maps = Vec::with_capacity(cfg.frames as usize);
    let mut frames = Vec::with_capacity(cfg.frames as usize);
    for k in 0..cfg.frames {
        let (truths, cube) = scene.realize(k)?;
        maps.push(compute_rd_map(&cube, scene.window)?);
        let targets = truths
            .into_iter()
            .map(|t| {
                let (range_bin, doppler_bin) = scene.radar.bin_of(t.nominal_range_m, t.nominal_velocity_mps);
                TargetRecord { range_bin, doppler_bin, truth: t }
            })
            .collect();
        frames.push(FrameTruth { frame: k, file: frame_file(k), targets });
    }

    create_dir(out)?;
    let mut files = Vec::new();
    for (f, map) in frames.iter().zip(&maps) {
        save_rdm(out.join(&f.file), map)?;
        files.push(f.file.clone());
    }
    let truth = TruthManifest {
        seed: scene.seed,
        radar: scene.radar,
        window: scene.window,
        noise_sigma: scene.noise.sigma,
        range_resolution_m: scene.radar.range_resolution_m(),
        velocity_resolution_mps: scene.radar.velocity_resolution_mps(),
        frames,
    };
    write_json(&out.join(TRUTH_FILE), &truth)?;
    files.push(TRUTH_FILE.into());
    Ok(Outcome {
        files,
        extra: serde_json::json!({
            "range_bins": scene.radar.fast_time_samples,
            "doppler_bins": scene.radar.chirps_per_frame,
        }),
    })
}
