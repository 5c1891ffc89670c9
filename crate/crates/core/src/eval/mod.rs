//! Monte Carlo evaluation: Pd/Pfa sweeps against OS-CFAR, threshold
//! trade-offs, duplicate-detection counts and skewness distribution studies.

mod report;
mod sampler;
mod scoring;
pub mod stats;
mod study;
mod sweep;

pub use report::{write_cfar_hits, write_detections, write_study, write_sweep, CFAR_HEADER, DETECTION_HEADER};
pub use sampler::SceneSampler;
pub use scoring::{per_segment_pfa, score_cfar_trial, score_trial, segment_touches_truth, MatchRule, TrialScore};
pub use stats::{wilson, Proportion};
pub use study::{
    corpus_segments, skewness_distribution_study, summarize, ClassSummary, CorpusConfig, CorpusKind, StudyConfig,
    StudyReport,
};
pub use sweep::{
    redundancy_study, run_sweep, CfarRow, RedundancyConfig, RedundancyReport, SkewRow, SweepConfig, SweepReport,
    TrialFailure,
};
