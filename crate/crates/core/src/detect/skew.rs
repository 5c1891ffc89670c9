use crate::rd::RdSegment;

/// Biased sample skewness `m3 / m2^{3/2}` with central moments taken over
/// `n`. Returns 0 for fewer than two values or zero variance.
pub fn skewness(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
    }
    m2 /= nf;
    m3 /= nf;
    from_moments(mean, m2, m3)
}

/// Relative spread below which a segment counts as constant; the mean of a
/// constant segment is not exact, so its residue is rounding noise.
const CONSTANT_RTOL: f64 = 1e-13;

pub(crate) fn from_moments(mean: f64, m2: f64, m3: f64) -> f64 {
    if m2 == 0.0 || m2 <= (CONSTANT_RTOL * mean) * (CONSTANT_RTOL * mean) {
        return 0.0;
    }
    m3 / (m2 * m2.sqrt())
}

pub fn segment_skewness(segment: &RdSegment) -> f64 {
    skewness(&segment.values)
}
