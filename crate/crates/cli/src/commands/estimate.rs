use std::path::Path;

use rdseg_core::inference::{
    fit_mixture_mle, gamma_mle_single, gibbs_fit, CellBatch, FitReport, GibbsSummary, MixtureParams,
    MixtureSummary,
};
use rdseg_core::rd::{batch_max, extract_segments, global_normalize, segment_centred_on, RdSegment, Stride};
use rdseg_core::rng::{self, Purpose};

use super::synth::TruthManifest;
use super::{create_dir, load_map, read_json, Outcome};
use crate::config::{EstimateConfig, EstimateMode};
use crate::error::{CliError, CliResult};
use crate::manifest::write_json;

pub const FIT_FILE: &str = "fit.json";

fn collect_segments(cfg: &EstimateConfig) -> CliResult<Vec<RdSegment>> {
    let mut segments = Vec::new();
    if let Some(truth_path) = &cfg.truth {
        let truth: TruthManifest = read_json(truth_path)?;
        let dir = truth_path.parent().unwrap_or(Path::new("."));
        for f in &truth.frames {
            let map = load_map(&dir.join(&f.file))?;
            for t in &f.targets {
                if cfg.shape.range_bins > map.range_bins || cfg.shape.doppler_bins > map.doppler_bins {
                    return Err(CliError::schema("segment does not fit in the map"));
                }
                segments.push(segment_centred_on(&map, (t.range_bin, t.doppler_bin), cfg.shape));
            }
        }
    } else {
        if cfg.inputs.is_empty() {
            return Err(CliError::schema("estimate needs input maps or a truth manifest"));
        }
        let stride = cfg
            .stride
            .unwrap_or(Stride { range: cfg.shape.range_bins, doppler: cfg.shape.doppler_bins });
        for p in &cfg.inputs {
            segments.extend(extract_segments(&load_map(p)?, cfg.shape, stride)?);
        }
    }
    if segments.is_empty() {
        return Err(CliError::schema("no segments to estimate from"));
    }
    Ok(segments)
}

pub fn run(cfg: &EstimateConfig, out: &Path) -> CliResult<Outcome> {
    cfg.mle.validate()?;
    cfg.gibbs.validate()?;
    let segments = collect_segments(cfg)?;
    let reference_max = cfg.reference_max.unwrap_or_else(|| batch_max(&segments));
    let normalized = global_normalize(&segments, reference_max)?;
    let batch = CellBatch::from_segments(&normalized.segments, 1.0)?;

    let mut report = FitReport {
        mode: serde_json::to_value(cfg.mode)?.as_str().unwrap_or_default().to_string(),
        n_cells: batch.len(),
        n_segments: segments.len(),
        floor: batch.floor(),
        floored_cells: batch.floored_count(),
        reference_max,
        seed: cfg.seed,
        mixture: None,
        gibbs: None,
        single_mle: None,
    };
    if matches!(cfg.mode, EstimateMode::Mle | EstimateMode::Both) {
        let single = gamma_mle_single(batch.values())?;
        let init = MixtureParams::bulk_and_tail(single);
        let fit = fit_mixture_mle(std::slice::from_ref(&batch), init, &cfg.mle)?;
        let (dominant_weight, dominant) = fit.params.dominant();
        report.single_mle = Some(single);
        report.mixture = Some(MixtureSummary {
            init,
            params: fit.params,
            dominant_weight,
            dominant,
            iterations: fit.iterations,
            converged: fit.converged,
            nll_history: fit.nll_history,
        });
    }
    if matches!(cfg.mode, EstimateMode::Gibbs | EstimateMode::Both) {
        let mut rng = rng::substream(cfg.seed, rng::stream_id(Purpose::Gibbs, 0, 0));
        let trace = gibbs_fit(&batch, &cfg.gibbs, &mut rng)?;
        report.gibbs = Some(GibbsSummary::from_trace(&trace));
    }

    create_dir(out)?;
    write_json(&out.join(FIT_FILE), &report)?;
    Ok(Outcome {
        files: vec![FIT_FILE.into()],
        extra: serde_json::json!({
            "reference_max_source": if cfg.reference_max.is_some() { "config" } else { "batch_max" },
        }),
    })
}
