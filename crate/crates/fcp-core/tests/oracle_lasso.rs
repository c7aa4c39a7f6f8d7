//! Oracle tests for the proximal-gradient l1 solver: frozen 1-D values,
//! separable and coupled grid oracles, monotonicity, and failure modes.

mod common;

use common::tolerances::*;
use common::{grid_argmin_separable, sym3_eigenvalues};
use fcp_core::data::{Dataset, DatasetKind};
use fcp_core::lasso::{solve_lasso, LassoConfig, LassoError};
use fcp_core::losses::{LossModel, SquaredLoss};

/// f(beta) = (beta - target)^2 / 2 as a squared loss over one sample.
fn shifted_quadratic(target: f64) -> Dataset {
    Dataset::new(vec![1.0], vec![target], 1, 1, 0, DatasetKind::Regression).unwrap()
}

#[test]
fn one_d_quadratic_shifts_by_the_threshold() {
    // f = (beta-3)^2/2, lambda = 1: minimizer of f + |.| is 2. Frozen from
    // brute-force grid minimization over [-5, 5].
    let d = shifted_quadratic(3.0);
    let loss = SquaredLoss::new(&d).unwrap();
    let r = solve_lasso(&loss, 1.0, &LassoConfig::default(), &[0.0]).unwrap();
    assert!(r.converged);
    assert!((r.beta[0] - 2.0).abs() < 1e-6, "got {}", r.beta[0]);
    assert!(r.residual <= 1e-7);

    let (grid_x, _) =
        common::grid_argmin_1d(|b| 0.5 * (b - 3.0) * (b - 3.0) + b.abs(), -5.0, 5.0, 1e-3);
    assert!((r.beta[0] - grid_x).abs() < GRID_MATCH);
}

#[test]
fn one_d_small_optimum_is_killed() {
    // f = (beta-0.5)^2/2, lambda = 1: |f'(0)| = 0.5 <= 1, so 0 satisfies the
    // subgradient condition and the threshold returns exactly 0.
    let d = shifted_quadratic(0.5);
    let loss = SquaredLoss::new(&d).unwrap();
    let r = solve_lasso(&loss, 1.0, &LassoConfig::default(), &[2.0]).unwrap();
    assert!(r.converged);
    assert_eq!(r.beta[0], 0.0);
}

#[test]
fn separable_p3_matches_per_coordinate_grid() {
    // Orthogonal design columns make f + lambda*l1 exactly separable, so the
    // joint grid argmin over [-5,5]^3 factors into per-coordinate grids.
    let diag = [1.0, 1.2, 0.8];
    let y = [0.9, -2.4, 1.5];
    let x = vec![
        diag[0], 0.0, 0.0, //
        0.0, diag[1], 0.0, //
        0.0, 0.0, diag[2],
    ];
    let d = Dataset::new(x, y.to_vec(), 3, 3, 0, DatasetKind::Regression).unwrap();
    let loss = SquaredLoss::new(&d).unwrap();
    let lambda = 0.3;
    let r = solve_lasso(&loss, lambda, &LassoConfig::default(), &[0.0; 3]).unwrap();
    assert!(r.converged);

    let oracle = grid_argmin_separable(
        |j, b| (y[j] - diag[j] * b).powi(2) / 6.0 + lambda * b.abs(),
        3,
        -5.0,
        5.0,
        1e-3,
    );
    for (j, (got, want)) in r.beta.iter().zip(&oracle).enumerate() {
        assert!(
            (got - want).abs() < GRID_MATCH,
            "coord {j}: {got} vs grid {want}"
        );
    }
    // The middle coordinate is far from 0 and the first is thresholded away.
    assert_eq!(r.beta[0], 0.0);
    assert!(r.beta[1] < -1.0);
}

/// Minimal-norm subgradient of 0.5 b'Qb - c'b + lambda*|b|_1 at `b`.
fn min_subgradient(q: &[[f64; 3]; 3], c: &[f64; 3], lambda: f64, b: &[f64; 3]) -> f64 {
    let mut norm2 = 0.0;
    for j in 0..3 {
        let g: f64 = (0..3).map(|k| q[j][k] * b[k]).sum::<f64>() - c[j];
        let r = if b[j] != 0.0 {
            g + lambda * b[j].signum()
        } else {
            g.signum() * (g.abs() - lambda).max(0.0)
        };
        norm2 += r * r;
    }
    norm2.sqrt()
}

/// Grid argmin of the quadratic-plus-l1 objective over a cube.
fn cube_argmin(
    q: &[[f64; 3]; 3],
    c: &[f64; 3],
    lambda: f64,
    center: &[f64; 3],
    radius: f64,
    res: f64,
) -> [f64; 3] {
    let steps = (2.0 * radius / res).round() as i64;
    let mut best = *center;
    let mut best_v = f64::INFINITY;
    for i in 0..=steps {
        let b0 = (center[0] - radius + res * i as f64).clamp(-5.0, 5.0);
        for j in 0..=steps {
            let b1 = (center[1] - radius + res * j as f64).clamp(-5.0, 5.0);
            for k in 0..=steps {
                let b2 = (center[2] - radius + res * k as f64).clamp(-5.0, 5.0);
                let b = [b0, b1, b2];
                let mut v = lambda * (b0.abs() + b1.abs() + b2.abs());
                for r in 0..3 {
                    let mut qb = 0.0;
                    for s in 0..3 {
                        qb += q[r][s] * b[s];
                    }
                    v += 0.5 * b[r] * qb - c[r] * b[r];
                }
                if v < best_v {
                    best_v = v;
                    best = b;
                }
            }
        }
    }
    best
}

#[test]
fn coupled_p3_matches_certified_zoom_grid() {
    // A coupled convex quadratic: full 3-D enumeration at 1e-3 over [-5,5]^3
    // is out of reach, so the oracle zooms: each stage's argmin g carries the
    // certificate |g - argmin| <= 2*|s_min(g)| / lambda_min(Q) from strong
    // convexity, which bounds the next stage's search cube rigorously.
    let x = vec![
        1.0, 0.4, -0.2, //
        -0.3, 1.1, 0.5, //
        0.2, -0.6, 0.9, //
        0.7, 0.1, -0.4,
    ];
    let y = vec![1.8, -0.6, 1.1, 0.4];
    let d = Dataset::new(x.clone(), y.clone(), 4, 3, 0, DatasetKind::Regression).unwrap();
    let loss = SquaredLoss::new(&d).unwrap();
    let lambda = 0.3;

    // Q = X'X/n and c = X'y/n so that f(b) = 0.5 b'Qb - c'b + const.
    let n = 4.0;
    let mut q = [[0.0; 3]; 3];
    let mut c = [0.0; 3];
    for i in 0..4 {
        for r in 0..3 {
            c[r] += x[i * 3 + r] * y[i] / n;
            for s in 0..3 {
                q[r][s] += x[i * 3 + r] * x[i * 3 + s] / n;
            }
        }
    }
    let eigs = sym3_eigenvalues(&q);
    let m_low = eigs[2] * 0.999; // slack for the closed form's rounding
    assert!(m_low > 0.05, "test instance must be strongly convex, got {m_low}");

    let mut center = [0.0; 3];
    let mut radius = 5.0;
    let mut res = 0.1;
    let oracle = loop {
        let g = cube_argmin(&q, &c, lambda, &center, radius, res);
        let certified = 2.0 * min_subgradient(&q, &c, lambda, &g) / m_low;
        if res <= 1e-3 {
            assert!(
                certified <= radius,
                "final stage cube must already contain the minimizer"
            );
            break g;
        }
        center = g;
        radius = (certified + 2.0 * res).max(4.0 * res);
        res = (radius / 40.0).max(1e-3);
    };

    let r = solve_lasso(&loss, lambda, &LassoConfig::default(), &[0.0; 3]).unwrap();
    assert!(r.converged);
    for (j, (got, want)) in r.beta.iter().zip(&oracle).enumerate() {
        assert!(
            (got - want).abs() < GRID_MATCH,
            "coord {j}: {got} vs zoom grid {want}"
        );
    }
}

#[test]
fn objective_descends_monotonically() {
    let x = vec![
        1.0, 0.4, -0.2, //
        -0.3, 1.1, 0.5, //
        0.2, -0.6, 0.9, //
        0.7, 0.1, -0.4,
    ];
    let y = vec![1.8, -0.6, 1.1, 0.4];
    let d = Dataset::new(x, y, 4, 3, 0, DatasetKind::Regression).unwrap();
    let loss = SquaredLoss::new(&d).unwrap();
    let r = solve_lasso(&loss, 0.3, &LassoConfig::default(), &[3.0, -3.0, 3.0]).unwrap();
    assert_eq!(r.objective_trace.len(), r.iterations + 1);
    for w in r.objective_trace.windows(2) {
        assert!(w[1] <= w[0] + MACHINE, "objective rose: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn max_iter_returns_flagged_best_effort() {
    let d = shifted_quadratic(3.0);
    let loss = SquaredLoss::new(&d).unwrap();
    // Tiny budget and a tiny step so the fixed point is out of reach.
    let cfg = LassoConfig {
        step: Some(1e-4),
        tol: 1e-12,
        max_iter: 3,
    };
    let r = solve_lasso(&loss, 1.0, &cfg, &[0.0]).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 3);
    assert_eq!(r.objective_trace.len(), 4);
    assert!(r.residual > 1e-12);
}

#[test]
fn fixed_point_accepted_immediately_counts_zero_iterations() {
    let d = shifted_quadratic(3.0);
    let loss = SquaredLoss::new(&d).unwrap();
    let r = solve_lasso(&loss, 1.0, &LassoConfig::default(), &[2.0]).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 0);
    assert_eq!(r.objective_trace.len(), 1);
}

#[test]
fn config_validation() {
    let d = shifted_quadratic(3.0);
    let loss = SquaredLoss::new(&d).unwrap(); // M = 1
    let ok = LassoConfig::default();

    assert!(matches!(
        solve_lasso(&loss, 0.0, &ok, &[0.0]),
        Err(LassoError::BadLambda(_))
    ));
    assert!(matches!(
        solve_lasso(&loss, f64::NAN, &ok, &[0.0]),
        Err(LassoError::BadLambda(_))
    ));

    let too_big = LassoConfig {
        step: Some(1.5),
        ..ok
    };
    assert!(matches!(
        solve_lasso(&loss, 1.0, &too_big, &[0.0]),
        Err(LassoError::StepTooLarge { .. })
    ));

    let bad_tol = LassoConfig { tol: 0.0, ..ok };
    assert!(solve_lasso(&loss, 1.0, &bad_tol, &[0.0]).is_err());

    let bad_iter = LassoConfig { max_iter: 0, ..ok };
    assert!(solve_lasso(&loss, 1.0, &bad_iter, &[0.0]).is_err());

    assert!(matches!(
        solve_lasso(&loss, 1.0, &ok, &[0.0, 0.0]),
        Err(LassoError::DimensionMismatch { .. })
    ));
}

/// A loss that understates its curvature so the default step diverges: the
/// iterates overflow and the solver must fail with the iteration index.
struct QuarticLoss;

impl LossModel for QuarticLoss {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, beta: &[f64]) -> f64 {
        0.25 * beta[0].powi(4)
    }
    fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        vec![beta[0].powi(3)]
    }
    fn lipschitz_bound(&self) -> f64 {
        1.0
    }
}

#[test]
fn divergence_reports_numerical_failure_with_iteration() {
    let cfg = LassoConfig {
        max_iter: 10_000,
        ..LassoConfig::default()
    };
    match solve_lasso(&QuarticLoss, 0.1, &cfg, &[2.0]) {
        Err(LassoError::NumericalFailure { iteration }) => {
            assert!(iteration >= 1, "overflow cannot precede the first update");
        }
        other => panic!("expected numerical failure, got {other:?}"),
    }
}
