use serde::{Deserialize, Serialize};

use super::GammaParams;
use crate::error::{Error, Result};
use crate::special::{digamma_unchecked, trigamma_unchecked};

/// Maximum-likelihood Gamma fit.
///
/// With `s = ln(mean z) - mean(ln z)` the shape solves `ln α - ψ(α) = s`,
/// started from Minka's closed-form approximation and polished by Newton.
/// The rate is then `α / mean z`.
pub fn gamma_mle_single(cells: &[f64]) -> Result<GammaParams> {
    if cells.len() < 2 {
        return Err(Error::DegenerateData(format!("{} cells, need at least 2", cells.len())));
    }
    if cells.iter().any(|z| !(*z > 0.0 && z.is_finite())) {
        return Err(Error::param("Gamma MLE needs strictly positive finite cells"));
    }
    let n = cells.len() as f64;
    let mean = cells.iter().sum::<f64>() / n;
    let mean_log = cells.iter().map(|z| z.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_log;
    // Jensen makes s >= 0 with equality only for constant data; rounding can
    // leave a tiny positive residue.
    if !(s > 1e-14) {
        return Err(Error::DegenerateData("all cells are (numerically) equal".into()));
    }
    let shape = solve_shape(s);
    if !shape.is_finite() {
        return Err(Error::DegenerateData(format!("shape equation did not converge for s = {s}")));
    }
    GammaParams::new(shape, shape / mean)
}

/// Root of `ln α - ψ(α) - s` for `s > 0`.
fn solve_shape(s: f64) -> f64 {
    let mut a = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..100 {
        let f = a.ln() - digamma_unchecked(a) - s;
        let df = 1.0 / a - trigamma_unchecked(a);
        // f is decreasing and convex, so after one step the iterates sit left
        // of the root and increase monotonically. Halve instead of stepping
        // to a negative α.
        let mut next = a - f / df;
        if next <= 0.0 {
            next = a / 2.0;
        }
        if (next - a).abs() <= 1e-15 * a {
            return next;
        }
        a = next;
    }
    a
}

/// Outcome of refitting the same cells divided by `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub original: GammaParams,
    pub scaled: GammaParams,
    /// `|α(z/λ) - α(z)| / α(z)`
    pub shape_rel_error: f64,
    /// `|β(z/λ) - λ β(z)| / (λ β(z))`
    pub rate_rel_error: f64,
}

impl ScalingReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.shape_rel_error <= tol && self.rate_rel_error <= tol
    }
}

/// Checks that dividing every cell by `λ` leaves the shape unchanged and
/// multiplies the rate by `λ`.
pub fn scaling_check(cells: &[f64], lambda: f64) -> Result<ScalingReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!("scale factor must be positive, got {lambda}")));
    }
    let original = gamma_mle_single(cells)?;
    let divided: Vec<f64> = cells.iter().map(|z| z / lambda).collect();
    let scaled = gamma_mle_single(&divided)?;
    let expected_rate = lambda * original.rate;
    Ok(ScalingReport {
        lambda,
        original,
        scaled,
        shape_rel_error: (scaled.shape - original.shape).abs() / original.shape,
        rate_rel_error: (scaled.rate - expected_rate).abs() / expected_rate,
    })
}
