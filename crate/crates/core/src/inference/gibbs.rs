use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{CellBatch, GammaParams};
use crate::error::{Error, Result};
use crate::special::{digamma, trigamma};

/// Upper clamp on the shape during the Newton solve.
pub const MAX_SHAPE: f64 = 1e6;

/// Gamma(a, b) prior on the rate. `a = b = 0` is the improper flat prior.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prior {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsConfig {
    pub prior: Prior,
    pub iterations: usize,
    /// Cap on inner Newton steps per shape update.
    pub newton_max_iters: usize,
    /// Damping added to the Hessian and used as the step tolerance and
    /// lower clamp on the shape.
    pub damping: f64,
    /// Starting point; `None` uses `(1, 1/mean z)`.
    pub init: Option<GammaParams>,
    /// Leading fraction of the chain dropped from the posterior mean.
    pub burn_in_fraction: f64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            prior: Prior::default(),
            iterations: 200,
            newton_max_iters: 100,
            damping: 1e-6,
            init: None,
            burn_in_fraction: 0.2,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.prior.a >= 0.0 && self.prior.b >= 0.0 && self.prior.a.is_finite() && self.prior.b.is_finite()) {
            return Err(Error::param("prior hyperparameters must be finite and non-negative"));
        }
        if self.iterations == 0 {
            return Err(Error::param("Gibbs needs at least one iteration"));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::param(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::param(format!("burn-in fraction must lie in [0, 1), got {}", self.burn_in_fraction)));
        }
        if let Some(init) = self.init {
            init.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsTrace {
    pub alpha_chain: Vec<f64>,
    pub beta_chain: Vec<f64>,
    pub burn_in: usize,
    /// Mean of the chain after burn-in.
    pub posterior_mean: GammaParams,
    /// Mean of the whole chain.
    pub posterior_mean_all: GammaParams,
}

impl GibbsTrace {
    pub fn alpha_tail_std(&self) -> f64 {
        let tail = &self.alpha_chain[self.alpha_chain.len() / 2..];
        let n = tail.len() as f64;
        let m = tail.iter().sum::<f64>() / n;
        (tail.iter().map(|a| (a - m).powi(2)).sum::<f64>() / n).sqrt()
    }
}

/// One conjugate draw `β ~ Gamma(a + Nα, b + Σz)` (shape, rate).
pub fn sample_beta_posterior<R: Rng + ?Sized>(
    alpha: f64,
    cells_sum: f64,
    n_cells: usize,
    prior: Prior,
    rng: &mut R,
) -> Result<f64> {
    let shape = prior.a + n_cells as f64 * alpha;
    let rate = prior.b + cells_sum;
    if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(Error::param(format!("posterior Gamma({shape}, {rate}) is improper")));
    }
    let dist = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::param(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Damped Newton on `g(α) = N(ln β - ψ(α)) + Σ ln z`, the score of the
/// Gamma log-likelihood in `α` at fixed `β`.
///
/// Each step is `α ← α - g / (h + ε)` with `h = -N ψ'(α)` (halving `α`
/// instead when the step would cross zero), then the iterate is clamped to
/// `[ε, MAX_SHAPE]`. Stops when the step is below `ε` or after
/// `max_iters` steps.
pub fn newton_alpha(alpha0: f64, beta: f64, log_sum: f64, n_cells: usize, damping: f64, max_iters: usize) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param(format!("rate must be positive, got {beta}")));
    }
    let n = n_cells as f64;
    let ln_beta = beta.ln();
    let mut alpha = alpha0.clamp(damping, MAX_SHAPE);
    for _ in 0..max_iters {
        let g = n * (ln_beta - digamma(alpha)?) + log_sum;
        let h = -n * trigamma(alpha)?;
        let step = g / (h + damping);
        if !step.is_finite() {
            return Err(Error::DegenerateData(format!("non-finite Newton step at alpha = {alpha}")));
        }
        // An overshoot past zero would land on the ε clamp, where steps are
        // of order ε and the stop test fires far from the root; halve instead.
        let next = alpha - step;
        alpha = if next > 0.0 { next } else { alpha / 2.0 };
        alpha = alpha.max(damping).min(MAX_SHAPE);
        if step.abs() < damping {
            break;
        }
    }
    Ok(alpha)
}

/// Gibbs sampler for a single Gamma component: alternately draws the rate
/// from its conjugate posterior and sets the shape to the conditional mode.
pub fn gibbs_fit<R: Rng + ?Sized>(cells: &CellBatch, config: &GibbsConfig, rng: &mut R) -> Result<GibbsTrace> {
    config.validate()?;
    let n = cells.len();
    let sum = cells.sum();
    let log_sum = cells.log_sum();
    let init = match config.init {
        Some(p) => p,
        None => GammaParams { shape: 1.0, rate: n as f64 / sum },
    };
    let mut alpha = init.shape;
    let mut beta = init.rate;
    let mut alpha_chain = Vec::with_capacity(config.iterations);
    let mut beta_chain = Vec::with_capacity(config.iterations);
    for t in 0..config.iterations {
        let fail = |alpha: f64, beta: f64, reason: String| Error::Sampler {
            iteration: t,
            state: GammaParams { shape: alpha, rate: beta },
            reason,
        };
        let drawn = sample_beta_posterior(alpha, sum, n, config.prior, rng).map_err(|e| fail(alpha, beta, e.to_string()))?;
        if !(drawn > 0.0 && drawn.is_finite()) {
            return Err(fail(alpha, beta, format!("rate draw {drawn} is not positive")));
        }
        beta = drawn;
        alpha = newton_alpha(alpha, beta, log_sum, n, config.damping, config.newton_max_iters)
            .map_err(|e| fail(alpha, beta, e.to_string()))?;
        alpha_chain.push(alpha);
        beta_chain.push(beta);
    }
    let burn_in = (config.burn_in_fraction * config.iterations as f64).floor() as usize;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(GibbsTrace {
        posterior_mean: GammaParams { shape: mean(&alpha_chain[burn_in..]), rate: mean(&beta_chain[burn_in..]) },
        posterior_mean_all: GammaParams { shape: mean(&alpha_chain), rate: mean(&beta_chain) },
        alpha_chain,
        beta_chain,
        burn_in,
    })
}
