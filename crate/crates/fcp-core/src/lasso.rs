//! Proximal-gradient (ISTA) solver for l1-regularized smooth losses, used to
//! warm-start the folded-concave solver.
//!
//! Plain ISTA with a fixed step, no acceleration: monotonicity of the
//! penalized objective is part of the contract (downstream assertions rely on
//! it), and accelerated variants are non-monotone without restarts.

use crate::data::norm1;
use crate::losses::LossModel;
use crate::penalty::soft_threshold;
use thiserror::Error;

/// Default fixed-point residual tolerance: comfortably below the parameter
/// scales of the experiments (unit-order coefficients) while reachable by
/// first-order iterations on well-conditioned instances.
pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Configuration for [`solve_lasso`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig {
    /// Gradient step; `None` takes `1/M` from the loss. Values above `1/M`
    /// are rejected — the monotonicity guarantee needs the majorization.
    pub step: Option<f64>,
    /// Infinity-norm prox fixed-point residual at which to stop.
    pub tol: f64,
    /// Cap on the number of proximal-gradient updates.
    pub max_iter: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            step: None,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Outcome of an ISTA run.
#[derive(Debug, Clone)]
pub struct LassoResult {
    pub beta: Vec<f64>,
    /// Number of proximal-gradient updates applied.
    pub iterations: usize,
    /// Whether the fixed-point residual reached `tol`; when `false`, `beta`
    /// is the best-effort iterate at `max_iter` (monotone descent makes the
    /// last iterate the best one).
    pub converged: bool,
    /// `‖β − soft_threshold(β − step·∇f(β), step·λ)‖_∞` at the returned `beta`.
    pub residual: f64,
    /// Penalized objective `f + λ‖·‖₁` at each accepted iterate; length is
    /// `iterations + 1`.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LassoError {
    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("step {step} exceeds 1/M = {inv_m}")]
    StepTooLarge { step: f64, inv_m: f64 },
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("tol must be positive, got {0}")]
    BadTol(f64),
    #[error("max_iter must be positive")]
    BadMaxIter,
    #[error("initial point length {got} does not match loss dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered at iteration {iteration}")]
    NumericalFailure { iteration: usize },
}

/// Minimizes `f(β) + λ‖β‖₁` for a convex smooth `f` (convexity is the
/// caller's responsibility) by ISTA from `beta0`.
///
/// Returns once the prox fixed-point residual `‖β − T(β)‖_∞` falls to
/// `cfg.tol` — the returned iterate itself carries the certificate — or after
/// `cfg.max_iter` updates with `converged = false`. With `step ≤ 1/M` the
/// penalized objective never increases between iterates.
pub fn solve_lasso<L: LossModel + ?Sized>(
    loss: &L,
    lambda: f64,
    cfg: &LassoConfig,
    beta0: &[f64],
) -> Result<LassoResult, LassoError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(LassoError::BadLambda(lambda));
    }
    if cfg.tol <= 0.0 || cfg.tol.is_nan() {
        return Err(LassoError::BadTol(cfg.tol));
    }
    if cfg.max_iter == 0 {
        return Err(LassoError::BadMaxIter);
    }
    if beta0.len() != loss.dim() {
        return Err(LassoError::DimensionMismatch {
            expected: loss.dim(),
            got: beta0.len(),
        });
    }
    let m = loss.lipschitz_bound();
    let step = match cfg.step {
        Some(s) => s,
        None => 1.0 / m,
    };
    if !(step > 0.0 && step.is_finite()) {
        return Err(LassoError::BadStep(step));
    }
    // Tiny relative slack so `step = 1/M` passes through the division.
    if m > 0.0 && step > (1.0 + 1e-12) / m {
        return Err(LassoError::StepTooLarge {
            step,
            inv_m: 1.0 / m,
        });
    }

    let mut beta = beta0.to_vec();
    let objective = |b: &[f64]| loss.value(b) + lambda * norm1(b);
    let first = objective(&beta);
    if !first.is_finite() {
        return Err(LassoError::NumericalFailure { iteration: 0 });
    }
    let mut trace = vec![first];

    for k in 0..=cfg.max_iter {
        let grad = loss.gradient(&beta);
        let next: Vec<f64> = beta
            .iter()
            .zip(&grad)
            .map(|(&b, &g)| soft_threshold(b - step * g, step * lambda))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(LassoError::NumericalFailure { iteration: k });
        }
        let residual = beta
            .iter()
            .zip(&next)
            .fold(0.0f64, |r, (b, n)| r.max((b - n).abs()));
        let done = residual <= cfg.tol;
        if done || k == cfg.max_iter {
            return Ok(LassoResult {
                beta,
                iterations: k,
                converged: done,
                residual,
                objective_trace: trace,
            });
        }
        beta = next;
        let obj = objective(&beta);
        if !obj.is_finite() {
            return Err(LassoError::NumericalFailure { iteration: k + 1 });
        }
        trace.push(obj);
    }
    unreachable!("loop returns at or before max_iter");
}
