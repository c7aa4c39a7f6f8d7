//! First-order solver for losses regularized by the folded-concave penalty in
//! [`crate::penalty`], built around two update kinds:
//!
//! * **case 1** — some coordinate sits strictly inside the exclusion zone
//!   `(0, a*lambda)`: a one-coordinate trust-region move of radius `gamma`
//!   minimizes the linearized loss plus the exact penalty over the candidate
//!   set `{0, beta - gamma, beta + gamma}` (0 only when it is reachable).
//! * **case 2** — every coordinate is at 0 or in the flat tail
//!   `|beta| >= a*lambda`: a simultaneous thresholded gradient step of size
//!   `alpha_hat` updates all coordinates at once.
//!
//! The run terminates when an entire case-2 step moves the iterate less than
//! `gamma` in Euclidean norm, which certifies approximate stationarity: the
//! returned point carries an [`S3oncCertificate`] with a minimal-norm
//! subgradient residual no larger than `max(2*M*gamma, gamma/alpha_hat)`,
//! itself no larger than the requested accuracy `gamma_hat`. The step sizes
//! require `alpha_hat < 2/M` and penalty curvature `a < 1/M`, where `M` is a
//! gradient Lipschitz bound for the smooth loss; those margins also yield a
//! worst-case bound on the number of iterations
//! ([`SolverConfig::iteration_bound`]) because every accepted step decreases
//! the penalized objective by at least a fixed quadratic amount except for
//! the final one.

use crate::losses::LossModel;
use crate::penalty::{h1_derivative, mcp_derivative, mcp_total, soft_threshold, PenaltyParams};
use thiserror::Error;

/// Step sizes and stopping thresholds for [`run`].
///
/// Construct through [`SolverConfig::new`], which derives `gamma` from the
/// requested stationarity accuracy `gamma_hat`; the identity is re-checked at
/// run time so hand-edited configs cannot silently change the guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Requested stationarity accuracy: the certificate tolerance
    /// [`SolverConfig::tolerance`] never exceeds this.
    pub gamma_hat: f64,
    /// Gradient step size for case-2 updates; must satisfy
    /// `alpha_hat < 2/m`.
    pub alpha_hat: f64,
    /// Trust-region radius and termination threshold, always exactly
    /// `min(gamma_hat / (2 m), alpha_hat * gamma_hat)`.
    pub gamma: f64,
    /// Cap on accepted iterations; `None` uses ten times
    /// [`SolverConfig::iteration_bound`] evaluated at the starting point.
    pub max_iter: Option<usize>,
    /// Gradient Lipschitz bound for the smooth loss.
    pub m: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error("gamma_hat must be positive and finite, got {0}")]
    BadGammaHat(f64),
    #[error("alpha_hat must lie in (0, 2/m); got {alpha_hat} with 2/m = {limit}")]
    BadAlphaHat { alpha_hat: f64, limit: f64 },
    #[error("lipschitz bound m must be positive and finite, got {0}")]
    BadM(f64),
    #[error("gamma must equal min(gamma_hat/(2m), alpha_hat*gamma_hat) = {want}, got {got}")]
    BadGamma { got: f64, want: f64 },
    #[error("penalty curvature a = {a} too concave: the exclusion-zone argument needs a < 1/m = {limit}")]
    PenaltyTooConcave { a: f64, limit: f64 },
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("starting point or its objective is not finite")]
    NonFiniteStart,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminatedBy {
    /// The stationarity criteria fired: every coordinate outside the
    /// exclusion zone and a case-2 step moved less than `gamma`.
    CriteriaMet,
    /// The iteration cap was reached first.
    MaxIter,
    /// A gradient, iterate, or objective value stopped being finite; the
    /// result holds the last finite iterate and trace.
    NumericalFailure,
}

/// Approximate-stationarity certificate for a point.
///
/// `first_order_residual` is the Euclidean norm of the minimal-norm
/// subgradient of the penalized objective: at nonzero coordinates the plain
/// gradient of loss plus penalty, at zero coordinates the distance from the
/// negated smooth gradient to the interval `[-lambda, lambda]` contributed by
/// the kink. `exclusion_zone_ok` records whether no coordinate lies strictly
/// inside `(0, a*lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct S3oncCertificate {
    pub first_order_residual: f64,
    pub exclusion_zone_ok: bool,
    pub tolerance: f64,
}

impl S3oncCertificate {
    /// True when the residual is within tolerance and no coordinate sits in
    /// the exclusion zone.
    pub fn passes(&self) -> bool {
        self.first_order_residual <= self.tolerance && self.exclusion_zone_ok
    }
}

/// Outcome of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    /// Terminal iterate (for [`TerminatedBy::CriteriaMet`], the point at
    /// which the sub-`gamma` step was detected; the candidate step itself is
    /// discarded).
    pub beta: Vec<f64>,
    /// Number of accepted transitions; `objective_trace` has one more entry.
    pub iterations: usize,
    /// Penalized objective at the start and after every accepted transition.
    pub objective_trace: Vec<f64>,
    pub terminated_by: TerminatedBy,
    /// Stationarity certificate evaluated at `beta` with tolerance
    /// [`SolverConfig::tolerance`].
    pub certificate: S3oncCertificate,
    /// Iterate with the lowest penalized objective seen (earliest on ties).
    pub best_beta: Vec<f64>,
    /// Penalized objective at `best_beta`; never exceeds the starting value.
    pub suboptimality_witness: f64,
}

impl SolverConfig {
    /// Builds a config for a loss with gradient Lipschitz bound `m`,
    /// deriving `gamma = min(gamma_hat/(2m), alpha_hat*gamma_hat)`.
    pub fn new(gamma_hat: f64, alpha_hat: f64, m: f64) -> Result<Self, SolverError> {
        let cfg = SolverConfig {
            gamma_hat,
            alpha_hat,
            gamma: (gamma_hat / (2.0 * m)).min(alpha_hat * gamma_hat),
            max_iter: None,
            m,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Re-checks every invariant `new` establishes.
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(SolverError::BadM(self.m));
        }
        if !(self.gamma_hat.is_finite() && self.gamma_hat > 0.0) {
            return Err(SolverError::BadGammaHat(self.gamma_hat));
        }
        let limit = 2.0 / self.m;
        if !(self.alpha_hat.is_finite() && self.alpha_hat > 0.0 && self.alpha_hat < limit) {
            return Err(SolverError::BadAlphaHat {
                alpha_hat: self.alpha_hat,
                limit,
            });
        }
        let want = (self.gamma_hat / (2.0 * self.m)).min(self.alpha_hat * self.gamma_hat);
        if self.gamma != want {
            return Err(SolverError::BadGamma {
                got: self.gamma,
                want,
            });
        }
        Ok(())
    }

    /// Certificate tolerance `max(2*m*gamma, gamma/alpha_hat)`; by the
    /// definition of `gamma` this never exceeds `gamma_hat`.
    pub fn tolerance(&self) -> f64 {
        (2.0 * self.m * self.gamma).max(self.gamma / self.alpha_hat)
    }

    /// Worst-case count of accepted iterations before the stopping rule
    /// fires, for a loss bounded below by 0 started at penalized objective
    /// `initial_objective`: each accepted step except the last descends by at
    /// least `min(1/(2a) - m/2, m/2, 1/alpha_hat - m/2) * gamma^2`.
    pub fn iteration_bound(&self, initial_objective: f64, params: &PenaltyParams) -> usize {
        let descent = (1.0 / (2.0 * params.a) - self.m / 2.0)
            .min(self.m / 2.0)
            .min(1.0 / self.alpha_hat - self.m / 2.0);
        let steps = initial_objective.max(0.0) / (descent * self.gamma * self.gamma);
        // f64 -> usize saturates, which is the desired behavior for huge or
        // infinite bounds.
        (steps.ceil() as usize).saturating_add(1)
    }

    fn effective_max_iter(&self, initial_objective: f64, params: &PenaltyParams) -> usize {
        self.max_iter.unwrap_or_else(|| {
            self.iteration_bound(initial_objective, params)
                .saturating_mul(10)
        })
    }
}

/// One trust-region move for coordinate `iota`, which must lie strictly
/// inside the exclusion zone. Returns the new value for that coordinate: the
/// minimizer of `grad[iota] * b + P(|b|)` over the candidates
/// `{0, beta[iota] - gamma, beta[iota] + gamma}` restricted to
/// `[beta[iota] - gamma, beta[iota] + gamma]` (so 0 participates only when
/// `|beta[iota]| <= gamma`). Ties prefer 0, then the smaller magnitude.
pub fn case1_step(
    beta: &[f64],
    grad: &[f64],
    iota: usize,
    params: &PenaltyParams,
    gamma: f64,
) -> f64 {
    let b = beta[iota];
    let g = grad[iota];
    debug_assert!(
        params.in_exclusion_zone(b.abs()),
        "case-1 coordinate must be inside the exclusion zone"
    );
    let mut candidates = [b - gamma, b + gamma, 0.0];
    let n = if b.abs() <= gamma { 3 } else { 2 };
    // Stable preference on exact objective ties: 0 first, then smaller |b|.
    candidates[..n].sort_by(|x, y| {
        (x != &0.0, x.abs())
            .partial_cmp(&(y != &0.0, y.abs()))
            .unwrap()
    });
    let objective = |x: f64| g * x + crate::penalty::mcp_value(x, params);
    let mut best = candidates[0];
    let mut best_val = objective(best);
    for &c in &candidates[1..n] {
        let v = objective(c);
        if v < best_val {
            best = c;
            best_val = v;
        }
    }
    best
}

/// One simultaneous thresholded gradient step, valid only when no coordinate
/// is strictly inside the exclusion zone (a violation is an internal logic
/// error and panics): zero coordinates move by the soft-thresholded gradient
/// `soft(-alpha_hat * g, alpha_hat * lambda)`, tail coordinates take a plain
/// gradient step.
pub fn case2_step(
    beta: &[f64],
    grad: &[f64],
    cfg: &SolverConfig,
    params: &PenaltyParams,
) -> Vec<f64> {
    beta.iter()
        .zip(grad)
        .map(|(&b, &g)| {
            assert!(
                !params.in_exclusion_zone(b.abs()),
                "case-2 step on a coordinate inside the exclusion zone"
            );
            if b == 0.0 {
                soft_threshold(-cfg.alpha_hat * g, cfg.alpha_hat * params.lambda)
            } else {
                b - cfg.alpha_hat * g
            }
        })
        .collect()
}

/// Evaluates the stationarity certificate at `beta` with tolerance `tol`.
pub fn check_s3onc<L: LossModel + ?Sized>(
    beta: &[f64],
    loss: &L,
    params: &PenaltyParams,
    tol: f64,
) -> S3oncCertificate {
    let grad = loss.gradient(beta);
    let mut sq = 0.0;
    let mut exclusion_zone_ok = true;
    for (&b, &g) in beta.iter().zip(&grad) {
        if params.in_exclusion_zone(b.abs()) {
            exclusion_zone_ok = false;
        }
        let r = if b == 0.0 {
            // Smooth part of the penalty is flat at 0; the l1 kink
            // contributes any value in [-lambda, lambda].
            let smooth = g + h1_derivative(0.0, params);
            smooth + (-smooth).clamp(-params.lambda, params.lambda)
        } else {
            g + mcp_derivative(b, params).expect("nonzero coordinate")
        };
        sq += r * r;
    }
    S3oncCertificate {
        first_order_residual: sq.sqrt(),
        exclusion_zone_ok,
        tolerance: tol,
    }
}

/// Minimizes `loss + sum_j P(|beta_j|)` from `beta0`. See the module docs
/// for the update rules and the termination guarantee.
pub fn run<L: LossModel + ?Sized>(
    loss: &L,
    params: &PenaltyParams,
    cfg: &SolverConfig,
    beta0: &[f64],
) -> Result<SolverResult, SolverError> {
    run_with_observer(loss, params, cfg, beta0, |_, _, _| {})
}

/// [`run`] with a callback invoked as `(k, iterate, objective)` for the
/// starting point (`k = 0`) and every accepted iterate, in order. Reruns
/// replay identical trajectories, so the callback supports snapshotting
/// chosen iterations without storing the whole path.
pub fn run_with_observer<L, F>(
    loss: &L,
    params: &PenaltyParams,
    cfg: &SolverConfig,
    beta0: &[f64],
    mut observer: F,
) -> Result<SolverResult, SolverError>
where
    L: LossModel + ?Sized,
    F: FnMut(usize, &[f64], f64),
{
    cfg.validate()?;
    if params.a * cfg.m >= 1.0 {
        return Err(SolverError::PenaltyTooConcave {
            a: params.a,
            limit: 1.0 / cfg.m,
        });
    }
    if beta0.len() != loss.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: loss.dim(),
            got: beta0.len(),
        });
    }
    let objective = |b: &[f64]| loss.value(b) + mcp_total(b, params);
    let mut beta = beta0.to_vec();
    let mut obj = objective(&beta);
    if !(beta.iter().all(|v| v.is_finite()) && obj.is_finite()) {
        return Err(SolverError::NonFiniteStart);
    }

    let max_iter = cfg.effective_max_iter(obj, params);
    let mut trace = vec![obj];
    let mut best_beta = beta.clone();
    let mut best_obj = obj;
    let mut k = 0usize;
    observer(0, &beta, obj);

    let finish = |terminated_by: TerminatedBy,
                  beta: Vec<f64>,
                  k: usize,
                  trace: Vec<f64>,
                  best_beta: Vec<f64>,
                  best_obj: f64| {
        let certificate = check_s3onc(&beta, loss, params, cfg.tolerance());
        Ok(SolverResult {
            beta,
            iterations: k,
            objective_trace: trace,
            terminated_by,
            certificate,
            best_beta,
            suboptimality_witness: best_obj,
        })
    };

    loop {
        let grad = loss.gradient(&beta);
        if !grad.iter().all(|g| g.is_finite()) {
            return finish(TerminatedBy::NumericalFailure, beta, k, trace, best_beta, best_obj);
        }
        let zone_coordinate = beta
            .iter()
            .position(|&b| params.in_exclusion_zone(b.abs()));
        let next = match zone_coordinate {
            Some(iota) => {
                let mut next = beta.clone();
                next[iota] = case1_step(&beta, &grad, iota, params, cfg.gamma);
                next
            }
            None => {
                let next = case2_step(&beta, &grad, cfg, params);
                let dist: f64 = beta
                    .iter()
                    .zip(&next)
                    .map(|(b, n)| (b - n) * (b - n))
                    .sum::<f64>()
                    .sqrt();
                if dist < cfg.gamma {
                    // Stationarity detected at the current iterate; the
                    // candidate step is discarded.
                    return finish(TerminatedBy::CriteriaMet, beta, k, trace, best_beta, best_obj);
                }
                next
            }
        };
        if k >= max_iter {
            return finish(TerminatedBy::MaxIter, beta, k, trace, best_beta, best_obj);
        }
        if !next.iter().all(|v| v.is_finite()) {
            return finish(TerminatedBy::NumericalFailure, beta, k, trace, best_beta, best_obj);
        }
        let next_obj = objective(&next);
        if !next_obj.is_finite() {
            return finish(TerminatedBy::NumericalFailure, beta, k, trace, best_beta, best_obj);
        }
        beta = next;
        obj = next_obj;
        k += 1;
        trace.push(obj);
        observer(k, &beta, obj);
        if obj < best_obj {
            best_obj = obj;
            best_beta = beta.clone();
        }
    }
}
