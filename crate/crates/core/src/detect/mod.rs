//! Skewness test statistic, the sliding-segment detection pipeline and an
//! OS-CFAR baseline.

mod oscfar;
mod pipeline;
mod skew;

pub use oscfar::{
    analytic_pfa, analytic_scale, calibrate_from_noise, calibrate_scale, calibration_noise_map, cfar_ratios,
    hits_at_scale, order_statistics, oscfar_detect, ratio_quantile, CfarCalibration, CfarHit, OscfarConfig,
};
pub use pipeline::{
    detect_map, detections_from_scores, iou, merge_detections, recenter, score_at, score_segments, Detection,
    DetectorConfig, Rect, SegmentScore,
};
pub use skew::{segment_skewness, skewness};
