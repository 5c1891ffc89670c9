//! Gamma and two-component Gamma-mixture estimation from RD-segment cells.
//!
//! - [`gamma_mle_single`]: closed-form-plus-Newton maximum likelihood for one
//!   Gamma component.
//! - [`fit_mixture_mle`]: gradient descent on the mean mixture NLL.
//! - [`gibbs_fit`]: Gibbs sampler alternating a conjugate draw of the rate
//!   with a Newton solve for the shape.
//!
//! All densities use the shape/rate convention
//! `f(z) = β^α z^(α-1) e^(-βz) / Γ(α)`.

mod gibbs;
mod mixture;
mod mle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rd::RdSegment;

pub use gibbs::{gibbs_fit, newton_alpha, sample_beta_posterior, GibbsConfig, GibbsTrace, Prior};
pub use mixture::{
    fit_mixture_mle, mixture_nll, mixture_nll_and_gradient, MixtureCoords, MixtureFit, MleConfig,
};
pub use mle::{gamma_mle_single, scaling_check, ScalingReport};

/// Shape `α` and rate `β` of a Gamma distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        let p = Self { shape, rate };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape > 0.0 && self.shape.is_finite() && self.rate > 0.0 && self.rate.is_finite() {
            Ok(())
        } else {
            Err(Error::param(format!(
                "Gamma parameters must be positive and finite, got shape {} rate {}",
                self.shape, self.rate
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    /// `2 / √α`, independent of the rate.
    pub fn skewness(&self) -> f64 {
        2.0 / self.shape.sqrt()
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        self.ln_pdf_with_log(z, z.ln())
    }

    #[inline]
    pub(crate) fn ln_pdf_with_log(&self, z: f64, ln_z: f64) -> f64 {
        self.shape * self.rate.ln() - crate::special::ln_gamma(self.shape) + (self.shape - 1.0) * ln_z
            - self.rate * z
    }
}

/// Weights and components of a two-component Gamma mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub w1: f64,
    pub w2: f64,
    pub comp1: GammaParams,
    pub comp2: GammaParams,
}

impl MixtureParams {
    pub fn new(w1: f64, comp1: GammaParams, comp2: GammaParams) -> Result<Self> {
        let p = Self { w1, w2: 1.0 - w1, comp1, comp2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.comp1.validate()?;
        self.comp2.validate()?;
        if !(self.w1 >= 0.0 && self.w2 >= 0.0 && (self.w1 + self.w2 - 1.0).abs() < 1e-12) {
            return Err(Error::param(format!("weights {} + {} must be non-negative and sum to 1", self.w1, self.w2)));
        }
        Ok(())
    }

    /// `(weight, component)` of the heavier component.
    pub fn dominant(&self) -> (f64, GammaParams) {
        if self.w1 >= self.w2 {
            (self.w1, self.comp1)
        } else {
            (self.w2, self.comp2)
        }
    }

    /// Start used by the CLI and the acceptance corpus: both components at
    /// the single-Gamma MLE shape, one at the MLE rate and one with a
    /// 100× larger scale, equally weighted.
    pub fn bulk_and_tail(single: GammaParams) -> Self {
        Self {
            w1: 0.5,
            w2: 0.5,
            comp1: GammaParams { shape: single.shape, rate: single.rate / 100.0 },
            comp2: single,
        }
    }
}

/// Relative floor applied to cells before taking logarithms.
pub const CELL_FLOOR: f64 = 1e-300;

/// Flattened positive cells with cached logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct CellBatch {
    values: Vec<f64>,
    logs: Vec<f64>,
    floored: usize,
    floor: f64,
}

impl CellBatch {
    /// Cells below `CELL_FLOOR · scale` are raised to it and counted.
    /// `scale` is the normalisation scale of the data (1 for globally
    /// normalised segments).
    pub fn new(mut values: Vec<f64>, scale: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("empty batch"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param(format!("normalisation scale must be positive, got {scale}")));
        }
        let floor = CELL_FLOOR * scale;
        let mut floored = 0;
        for v in &mut values {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::param(format!("cell value {v} is not a finite power")));
            }
            if *v < floor {
                *v = floor;
                floored += 1;
            }
        }
        let logs = values.iter().map(|v| v.ln()).collect();
        Ok(Self { values, logs, floored, floor })
    }

    pub fn from_segments(segments: &[RdSegment], scale: f64) -> Result<Self> {
        Self::new(segments.iter().flat_map(|s| s.values.iter().copied()).collect(), scale)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn logs(&self) -> &[f64] {
        &self.logs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn floored_count(&self) -> usize {
        self.floored
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn log_sum(&self) -> f64 {
        self.logs.iter().sum()
    }
}

/// Serialised result of an estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mode: String,
    pub n_cells: usize,
    pub n_segments: usize,
    pub floor: f64,
    pub floored_cells: usize,
    pub reference_max: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gibbs: Option<GibbsSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub single_mle: Option<GammaParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSummary {
    pub init: MixtureParams,
    pub params: MixtureParams,
    pub dominant_weight: f64,
    pub dominant: GammaParams,
    pub iterations: usize,
    pub converged: bool,
    pub nll_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsSummary {
    pub iterations: usize,
    pub burn_in: usize,
    pub posterior_mean: GammaParams,
    pub posterior_mean_all: GammaParams,
    /// Standard deviation of the shape chain over its second half.
    pub alpha_tail_std: f64,
    pub alpha_chain: Vec<f64>,
    pub beta_chain: Vec<f64>,
}

impl GibbsSummary {
    pub fn from_trace(trace: &GibbsTrace) -> Self {
        Self {
            iterations: trace.alpha_chain.len(),
            burn_in: trace.burn_in,
            posterior_mean: trace.posterior_mean,
            posterior_mean_all: trace.posterior_mean_all,
            alpha_tail_std: trace.alpha_tail_std(),
            alpha_chain: trace.alpha_chain.clone(),
            beta_chain: trace.beta_chain.clone(),
        }
    }
}
