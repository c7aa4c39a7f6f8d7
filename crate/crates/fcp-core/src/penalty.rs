//! The minimax concave penalty (MCP) and its calculus.
//!
//! For strength `lambda > 0` and concavity scale `a > 0` the penalty is
//!
//! ```text
//! P(theta) = integral_0^|theta| max(a*lambda - t, 0) / a dt
//!          = lambda*|theta| - theta^2/(2a)   if |theta| <= a*lambda
//!          = a*lambda^2/2                    otherwise.
//! ```
//!
//! The slope starts at `lambda` (like the l1 penalty) and decays linearly to
//! zero at the knot `a*lambda`, beyond which the penalty is flat. Everything
//! downstream leans on two structural facts exposed here:
//!
//! * the decomposition `P(|theta|) = h1(theta) + lambda*|theta|` with `h1`
//!   differentiable everywhere and `h1'` Lipschitz with constant `1/a`, and
//! * the derivative queries at kinks (`theta = 0` for `P'`, plus
//!   `|theta| = a*lambda` for `P''`) returning typed "no classical value"
//!   outcomes instead of an arbitrary one-sided number, so callers pick the
//!   subgradient explicitly.
//!
//! All evaluations are closed-form; the test suite re-derives them by
//! numerical quadrature of the integral definition.

use thiserror::Error;

/// MCP parameters. The knot sits at `a * lambda`; coordinates with magnitude
/// beyond it are penalized by the constant `a * lambda^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    /// Regularization strength; the penalty's slope at the origin.
    pub lambda: f64,
    /// Concavity scale. Larger `a` pushes the knot out and makes the penalty
    /// closer to l1; the solver requires `a < 1/M` against the loss's
    /// gradient-Lipschitz bound `M` (checked there, not here).
    pub a: f64,
}

/// Parameter-validation failure for [`PenaltyParams`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("penalty parameters must be finite and positive: {what}")]
pub struct InvalidPenalty {
    what: &'static str,
}

/// Derivative queried exactly at a kink of the penalty; use the
/// subdifferential interval instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("derivative does not exist at a kink; query the subdifferential interval")]
pub struct Kink;

/// A closed interval `[lo, hi]`, used for subdifferentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Closest point of the interval to `x`.
    pub fn project(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl PenaltyParams {
    pub fn new(lambda: f64, a: f64) -> Result<Self, InvalidPenalty> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(InvalidPenalty { what: "lambda" });
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(InvalidPenalty { what: "a" });
        }
        Ok(Self { lambda, a })
    }

    /// The knot `a * lambda`: the right edge of the exclusion zone and the
    /// point where the penalty saturates.
    pub fn knot(&self) -> f64 {
        self.a * self.lambda
    }

    /// The saturated penalty value `a * lambda^2 / 2` attained beyond the knot.
    pub fn saturation(&self) -> f64 {
        0.5 * self.a * self.lambda * self.lambda
    }

    /// True when `magnitude` lies in the open exclusion zone `(0, a*lambda)`.
    /// Stationary points produced by the solver never have coordinate
    /// magnitudes here (given `a < 1/M`).
    pub fn in_exclusion_zone(&self, magnitude: f64) -> bool {
        magnitude > 0.0 && magnitude < self.knot()
    }
}

/// Penalty value `P(theta)`; even in `theta`, zero at zero, capped at
/// [`PenaltyParams::saturation`].
pub fn mcp_value(theta: f64, p: &PenaltyParams) -> f64 {
    let t = theta.abs();
    if t <= p.knot() {
        p.lambda * t - t * t / (2.0 * p.a)
    } else {
        p.saturation()
    }
}

/// Classical derivative `P'(theta) = sign(theta) * [a*lambda - |theta|]_+ / a`
/// for `theta != 0`. At `theta = 0` the penalty has a kink and the query
/// returns [`Kink`]; the subdifferential there is
/// [`mcp_subdifferential_at_zero`]. (The derivative at the knot itself exists
/// and equals zero: both one-sided slopes vanish.)
pub fn mcp_derivative(theta: f64, p: &PenaltyParams) -> Result<f64, Kink> {
    if theta == 0.0 {
        return Err(Kink);
    }
    Ok(theta.signum() * (p.knot() - theta.abs()).max(0.0) / p.a)
}

/// Subdifferential of `P` at zero: `[-lambda, lambda]` (the smooth part `h1`
/// contributes `h1'(0) = 0`).
pub fn mcp_subdifferential_at_zero(p: &PenaltyParams) -> Interval {
    Interval {
        lo: -p.lambda,
        hi: p.lambda,
    }
}

/// Second derivative where it classically exists: `-1/a` strictly inside the
/// knot, `0` strictly beyond it, and `None` at the kinks `theta = 0` and
/// `|theta| = a*lambda`.
pub fn mcp_second_derivative(theta: f64, p: &PenaltyParams) -> Option<f64> {
    let t = theta.abs();
    if t == 0.0 || t == p.knot() {
        None
    } else if t < p.knot() {
        Some(-1.0 / p.a)
    } else {
        Some(0.0)
    }
}

/// Smooth component of the decomposition `P(|theta|) = h1(theta) +
/// lambda*|theta|`:
///
/// ```text
/// h1(theta) = -theta^2/(2a)              if |theta| < a*lambda
///           = a*lambda^2/2 - lambda*|theta|  otherwise.
/// ```
pub fn h1_value(theta: f64, p: &PenaltyParams) -> f64 {
    let t = theta.abs();
    if t < p.knot() {
        -t * t / (2.0 * p.a)
    } else {
        p.saturation() - p.lambda * t
    }
}

/// Derivative of [`h1_value`]; defined everywhere, `h1'(0) = 0`, and
/// Lipschitz with constant `1/a` (the two branches meet with matching slopes
/// at the knot).
pub fn h1_derivative(theta: f64, p: &PenaltyParams) -> f64 {
    if theta.abs() < p.knot() {
        -theta / p.a
    } else {
        -p.lambda * theta.signum()
    }
}

/// `sign(x) * [|x| - t]_+`: the proximal operator of `t * |.|`, i.e. the exact
/// minimizer of `(1/2)(b - x)^2 + t*|b|`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0, "threshold must be nonnegative");
    x.signum() * (x.abs() - t).max(0.0)
}

/// Sum of per-coordinate penalty values, `sum_j P(beta_j)`.
pub fn mcp_total(beta: &[f64], p: &PenaltyParams) -> f64 {
    beta.iter().map(|&b| mcp_value(b, p)).sum()
}
