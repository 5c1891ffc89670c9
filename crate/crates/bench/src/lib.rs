//! Shared fixtures for the benchmarks.

use rdseg_core::eval::{corpus_segments, CorpusConfig, CorpusKind};
use rdseg_core::rd::{batch_max, global_normalize};
use rdseg_core::synth::{ComplexCube, NoiseSpec, Scene};
use rdseg_core::{CellBatch, RadarConfig, RdMap, TargetSpec, Window};

pub const SEED: u64 = 7;

/// Default-geometry scene with two extended targets.
pub fn scene() -> Scene {
    let mut near = TargetSpec::new(24.0, 4.0);
    near.snr_db = Some(20.0);
    let mut far = TargetSpec::new(51.0, -7.5);
    far.snr_db = Some(12.0);
    Scene {
        radar: RadarConfig::default(),
        targets: vec![near, far],
        noise: NoiseSpec::default(),
        seed: SEED,
        window: Window::Hann,
    }
}

pub fn cube() -> ComplexCube {
    scene().realize(0).expect("bench scene is valid").1
}

pub fn map() -> RdMap {
    rdseg_core::compute_rd_map(&cube(), Window::Hann).expect("bench cube is valid")
}

/// Globally normalised single-target cells, `n` segments.
pub fn batch(n: usize) -> CellBatch {
    let segs = corpus_segments(&CorpusConfig::default(), CorpusKind::SingleTarget, n, SEED).expect("corpus");
    let norm = global_normalize(&segs, batch_max(&segs)).expect("normalise");
    CellBatch::from_segments(&norm.segments, 1.0).expect("batch")
}
