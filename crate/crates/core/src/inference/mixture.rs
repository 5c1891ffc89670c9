use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CellBatch, GammaParams, MixtureParams};
use crate::error::{Error, Result};
use crate::special::{digamma_unchecked, ln_gamma};

/// Cells per parallel work item. Partial sums are reduced in chunk order so
/// results do not depend on the thread count.
const CHUNK: usize = 8192;

/// Unconstrained coordinates `[logit w1, ln α1, ln β1, ln α2, ln β2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureCoords(pub [f64; 5]);

impl MixtureCoords {
    pub fn from_params(p: &MixtureParams) -> Self {
        Self([
            p.w1.ln() - p.w2.ln(),
            p.comp1.shape.ln(),
            p.comp1.rate.ln(),
            p.comp2.shape.ln(),
            p.comp2.rate.ln(),
        ])
    }

    pub fn to_params(&self) -> MixtureParams {
        let [u, a1, b1, a2, b2] = self.0;
        let w1 = (-softplus(-u)).exp();
        MixtureParams {
            w1,
            w2: 1.0 - w1,
            comp1: GammaParams { shape: a1.exp(), rate: b1.exp() },
            comp2: GammaParams { shape: a2.exp(), rate: b2.exp() },
        }
    }

    fn is_finite(&self) -> bool {
        // ±∞ in the logit is a legal degenerate weight.
        self.0[1..].iter().all(|v| v.is_finite()) && !self.0[0].is_nan()
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Per-component constants of `ln(w_j f_j(z)) = c_j + (α_j - 1) ln z - β_j z`.
#[derive(Clone, Copy)]
struct Component {
    c: f64,
    shape: f64,
    rate: f64,
}

impl Component {
    fn new(ln_w: f64, g: GammaParams) -> Self {
        Self { c: ln_w + g.shape * g.rate.ln() - ln_gamma(g.shape), shape: g.shape, rate: g.rate }
    }

    #[inline]
    fn log_term(&self, z: f64, ln_z: f64) -> f64 {
        self.c + (self.shape - 1.0) * ln_z - self.rate * z
    }
}

/// Running sums over cells: `[Σ -ln p(z), Σ r1, Σ r1 ln z, Σ r1 z, Σ r2 ln z, Σ r2 z]`.
type Sums = [f64; 6];

fn chunk_sums(values: &[f64], logs: &[f64], k1: Component, k2: Component) -> Sums {
    let mut s = [0.0; 6];
    for (&z, &lz) in values.iter().zip(logs) {
        let l1 = k1.log_term(z, lz);
        let l2 = k2.log_term(z, lz);
        let m = l1.max(l2);
        let lse = m + ((l1 - m).exp() + (l2 - m).exp()).ln();
        let r1 = (l1 - lse).exp();
        let r2 = (l2 - lse).exp();
        s[0] -= lse;
        s[1] += r1;
        s[2] += r1 * lz;
        s[3] += r1 * z;
        s[4] += r2 * lz;
        s[5] += r2 * z;
    }
    s
}

fn total_sums(batches: &[CellBatch], k1: Component, k2: Component) -> (Sums, usize) {
    let mut total = [0.0; 6];
    let mut n = 0;
    for b in batches {
        let partial: Vec<Sums> = b
            .values()
            .par_chunks(CHUNK)
            .zip(b.logs().par_chunks(CHUNK))
            .map(|(v, l)| chunk_sums(v, l, k1, k2))
            .collect();
        for p in partial {
            for (t, x) in total.iter_mut().zip(p) {
                *t += x;
            }
        }
        n += b.len();
    }
    (total, n)
}

/// Mean negative log-likelihood of the mixture over the batch.
pub fn mixture_nll(batch: &CellBatch, params: &MixtureParams) -> Result<f64> {
    params.validate()?;
    let k1 = Component::new(params.w1.ln(), params.comp1);
    let k2 = Component::new(params.w2.ln(), params.comp2);
    let (s, n) = total_sums(std::slice::from_ref(batch), k1, k2);
    Ok(s[0] / n as f64)
}

/// Mean NLL over all cells of all batches and its gradient with respect to
/// the unconstrained coordinates.
pub fn mixture_nll_and_gradient(batches: &[CellBatch], coords: &MixtureCoords) -> Result<(f64, [f64; 5])> {
    if batches.iter().all(|b| b.is_empty()) {
        return Err(Error::param("no cells to fit"));
    }
    let [u, ..] = coords.0;
    let p = coords.to_params();
    let k1 = Component::new(-softplus(-u), p.comp1);
    let k2 = Component::new(-softplus(u), p.comp2);
    let (s, n) = total_sums(batches, k1, k2);
    let n = n as f64;
    let mean_r1 = s[1] / n;
    let mean_r2 = 1.0 - mean_r1;
    let (a1, b1) = (p.comp1.shape, p.comp1.rate);
    let (a2, b2) = (p.comp2.shape, p.comp2.rate);
    let grad = [
        -(mean_r1 - p.w1),
        -a1 * ((b1.ln() - digamma_unchecked(a1)) * mean_r1 + s[2] / n),
        -(a1 * mean_r1 - b1 * s[3] / n),
        -a2 * ((b2.ln() - digamma_unchecked(a2)) * mean_r2 + s[4] / n),
        -(a2 * mean_r2 - b2 * s[5] / n),
    ];
    Ok((s[0] / n, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MleConfig {
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop once successive NLL values differ by less than this.
    pub tolerance: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-2, max_iterations: 10_000, tolerance: 1e-8 }
    }
}

impl MleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::param(format!("tolerance must be non-negative, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub params: MixtureParams,
    /// NLL of every evaluated iterate, starting with the initial point.
    pub nll_history: Vec<f64>,
    /// Gradient steps taken.
    pub iterations: usize,
    pub converged: bool,
}

/// Plain gradient descent on the mean mixture NLL in log/logit coordinates.
///
/// Each iteration evaluates the NLL at the current point, stops when it
/// changed by less than `tolerance` since the previous evaluation, and
/// otherwise takes one step. `max_iterations = 0` returns `init` untouched.
pub fn fit_mixture_mle(batches: &[CellBatch], init: MixtureParams, config: &MleConfig) -> Result<MixtureFit> {
    config.validate()?;
    init.validate()?;
    let mut theta = MixtureCoords::from_params(&init);
    let mut last_valid = init;
    let mut last_nll = f64::NAN;
    let mut history = Vec::new();
    let mut steps = 0;
    let mut converged = false;
    loop {
        let (nll, grad) = mixture_nll_and_gradient(batches, &theta)?;
        if !nll.is_finite() || grad.iter().any(|g| !g.is_finite()) || !theta.is_finite() {
            return Err(Error::Optimization { iteration: steps, last_valid: Box::new(last_valid), last_nll });
        }
        if steps > 0 {
            last_valid = theta.to_params();
        }
        let prev = history.last().copied();
        history.push(nll);
        last_nll = nll;
        if prev.is_some_and(|p: f64| (nll - p).abs() < config.tolerance) {
            converged = true;
            break;
        }
        if steps == config.max_iterations {
            break;
        }
        for (t, g) in theta.0.iter_mut().zip(grad) {
            *t -= config.learning_rate * g;
        }
        steps += 1;
    }
    Ok(MixtureFit { params: last_valid, nll_history: history, iterations: steps, converged })
}
