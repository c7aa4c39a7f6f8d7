//! Oracle tests for the MCP penalty: every closed-form value is checked
//! against an independent numerical source (quadrature of the integral
//! definition, finite differences, or brute-force grid minimization).

mod common;

use common::tolerances as tol;
use fcp_core::penalty::{
    h1_derivative, h1_value, mcp_derivative, mcp_second_derivative, mcp_subdifferential_at_zero,
    mcp_value, soft_threshold, PenaltyParams,
};

fn params(lambda: f64, a: f64) -> PenaltyParams {
    PenaltyParams::new(lambda, a).expect("valid parameters")
}

#[test]
fn value_matches_quadrature_of_integral_definition() {
    // Frozen spot values first (quadrature oracle output, lambda=1, a=2):
    //   theta=1   -> 0.75          (inside the knot)
    //   theta=2   -> 1.0           (exactly at the knot, = a*lambda^2/2)
    //   theta=5   -> 1.0           (saturated tail)
    //   theta=0   -> 0             (empty integral)
    let p = params(1.0, 2.0);
    assert!((mcp_value(1.0, &p) - 0.75).abs() < tol::QUADRATURE_ABS);
    assert!((mcp_value(2.0, &p) - 1.0).abs() < tol::QUADRATURE_ABS);
    assert!((mcp_value(5.0, &p) - 1.0).abs() < tol::QUADRATURE_ABS);
    assert_eq!(mcp_value(0.0, &p), 0.0);

    // Dense sweep across all three regimes and several parameter sets.
    for &(lambda, a) in &[(1.0, 2.0), (0.25, 0.3), (2.0, 1.0), (0.7, 0.45)] {
        let p = params(lambda, a);
        let knot = a * lambda;
        let mut theta = -3.0 * knot;
        while theta <= 3.0 * knot {
            let oracle = common::mcp_quadrature_oracle(theta, lambda, a);
            let got = mcp_value(theta, &p);
            assert!(
                (got - oracle).abs() < tol::QUADRATURE_ABS,
                "mcp_value({theta}) = {got}, quadrature oracle = {oracle} (lambda={lambda}, a={a})"
            );
            theta += knot / 7.0;
        }
    }
}

#[test]
fn derivative_matches_finite_differences_of_quadrature() {
    let p = params(1.0, 2.0);
    // Frozen examples: P'(1) = 0.5, P'(3) = 0 (flat tail), P'(-1) = -0.5.
    assert!((mcp_derivative(1.0, &p).unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(mcp_derivative(3.0, &p).unwrap(), 0.0);
    assert!((mcp_derivative(-1.0, &p).unwrap() + 0.5).abs() < 1e-9);

    // Independent check: centered differences of the quadrature oracle.
    for &theta in &[0.3, 0.9, 1.7, 2.5, 4.0, -0.6, -2.2] {
        let fd = common::central_diff(
            |t| common::mcp_quadrature_oracle(t, 1.0, 2.0),
            theta,
            1e-5,
        );
        let got = mcp_derivative(theta, &p).unwrap();
        assert!(
            (got - fd).abs() < 1e-4,
            "P'({theta}) = {got} vs finite difference {fd}"
        );
    }

    // theta = 0 is a kink: the derivative query must refuse, and the
    // subdifferential query must hand back [-lambda, lambda].
    assert!(mcp_derivative(0.0, &p).is_err());
    let iv = mcp_subdifferential_at_zero(&p);
    assert_eq!((iv.lo, iv.hi), (-1.0, 1.0));
    let iv = mcp_subdifferential_at_zero(&params(0.25, 0.3));
    assert_eq!((iv.lo, iv.hi), (-0.25, 0.25));
    let iv = mcp_subdifferential_at_zero(&params(2.0, 1.0));
    assert_eq!((iv.lo, iv.hi), (-2.0, 2.0));
}

#[test]
fn second_derivative_piecewise_constants_and_kinks() {
    let p = params(1.0, 2.0);
    assert_eq!(mcp_second_derivative(1.0, &p), Some(-0.5)); // -1/a inside the knot
    assert_eq!(mcp_second_derivative(3.0, &p), Some(0.0)); // flat tail
    assert_eq!(mcp_second_derivative(2.0, &p), None); // knot itself
    assert_eq!(mcp_second_derivative(-2.0, &p), None);
    assert_eq!(mcp_second_derivative(0.0, &p), None); // kink of |.|

    // Curvature check away from kinks via second differences of the
    // quadrature oracle. The penalty is piecewise quadratic, so the second
    // difference is exact on each piece for any h; h is kept large enough
    // that the ~1e-11 quadrature noise is not amplified above tolerance.
    for &theta in &[0.5, 1.2, 2.8, -1.4] {
        let h = 1e-3;
        let o = |t: f64| common::mcp_quadrature_oracle(t, 1.0, 2.0);
        let fd2 = (o(theta + h) - 2.0 * o(theta) + o(theta - h)) / (h * h);
        let got = mcp_second_derivative(theta, &p).unwrap();
        assert!(
            (got - fd2).abs() < 1e-3,
            "P''({theta}) = {got} vs second difference {fd2}"
        );
    }
}

#[test]
fn h1_decomposition_identity_and_lipschitz_slope() {
    // P(|theta|) = h1(theta) + lambda*|theta| exactly, on a grid spanning all
    // regimes; h1(1) = -0.25 at (lambda=1, a=2); h1'(3) = -1 in the tail.
    let p = params(1.0, 2.0);
    assert!((h1_value(1.0, &p) + 0.25).abs() < tol::MACHINE);
    assert!((h1_derivative(3.0, &p) + 1.0).abs() < tol::MACHINE);
    assert_eq!(h1_value(0.0, &p), 0.0);
    assert_eq!(h1_derivative(0.0, &p), 0.0);

    for &(lambda, a) in &[(1.0, 2.0), (0.25, 0.3), (0.7, 0.45)] {
        let p = params(lambda, a);
        let knot = a * lambda;
        let mut theta = -2.5 * knot;
        while theta <= 2.5 * knot {
            let lhs = mcp_value(theta, &p);
            let rhs = h1_value(theta, &p) + lambda * theta.abs();
            assert!(
                (lhs - rhs).abs() < tol::MACHINE,
                "decomposition broke at theta={theta} (lambda={lambda}, a={a})"
            );
            // h1' is the derivative of h1 (finite differences, away from the
            // closed form) ...
            if theta.abs() > 1e-3 && (theta.abs() - knot).abs() > 1e-3 {
                let fd = common::central_diff(|t| h1_value(t, &p), theta, 1e-6);
                let got = h1_derivative(theta, &p);
                assert!(
                    (got - fd).abs() < 1e-6 * (1.0 + got.abs()),
                    "h1'({theta}) = {got} vs fd {fd}"
                );
            }
            theta += knot / 9.0;
        }
    }
}

#[test]
fn soft_threshold_is_the_prox_of_l1() {
    // soft_threshold(x, t) must equal argmin_b (1/2)(b-x)^2 + t|b|, located
    // here by brute-force grid search.
    assert_eq!(soft_threshold(3.0, 1.0), 2.0);
    assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
    assert_eq!(soft_threshold(-3.0, 1.0), -2.0);

    let mut state = 0x5EED_1234_u64;
    for _ in 0..200 {
        let x = common::mix_uniform(&mut state, -4.0, 4.0);
        let t = common::mix_uniform(&mut state, 0.0, 2.5);
        let (oracle, _) = common::grid_argmin_1d(
            |b| 0.5 * (b - x) * (b - x) + t * b.abs(),
            -5.0,
            5.0,
            tol::GRID_CELL,
        );
        let got = soft_threshold(x, t);
        assert!(
            (got - oracle).abs() <= tol::GRID_MATCH,
            "soft_threshold({x}, {t}) = {got}, grid oracle = {oracle}"
        );
    }
}

#[test]
fn parameter_validation_rejects_nonpositive() {
    assert!(PenaltyParams::new(0.0, 1.0).is_err());
    assert!(PenaltyParams::new(1.0, 0.0).is_err());
    assert!(PenaltyParams::new(-1.0, 1.0).is_err());
    assert!(PenaltyParams::new(1.0, -0.5).is_err());
    assert!(PenaltyParams::new(f64::NAN, 1.0).is_err());
    assert!(PenaltyParams::new(1.0, f64::INFINITY).is_err());
}
