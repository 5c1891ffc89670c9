//! Extended-target detection on FMCW range-Doppler maps.
//!
//! The crate covers the whole chain: synthesising chirp returns from
//! Swerling-3 scatterer clouds ([`synth`]), forming RD maps and segments
//! ([`rd`], [`rdm`]), fitting Gamma and Gamma-mixture models to segment cells
//! ([`inference`]), detecting targets with a segment skewness test and an
//! OS-CFAR baseline ([`detect`]) and Monte Carlo evaluation ([`eval`]).

pub mod detect;
pub mod eval;
pub mod error;
pub mod inference;
pub mod rd;
pub mod rdm;
pub mod rng;
pub mod special;
pub mod synth;

pub use detect::{Detection, DetectorConfig, OscfarConfig, Rect};
pub use error::{Error, Result};
pub use inference::{CellBatch, FitReport, GammaParams, MixtureParams};
pub use rd::{compute_rd_map, RdMap, RdSegment, SegmentShape, Stride, Window};
pub use synth::{RadarConfig, Scene, TargetSpec, TargetTruth};
