//! Sparse M-estimation with the minimax concave penalty (MCP).
//!
//! The crate provides the pieces of a folded-concave-penalty estimation
//! pipeline and keeps each one independently testable:
//!
//! * [`penalty`] — the MCP `P_lambda`, its derivatives, the concave
//!   decomposition `P_lambda(|t|) = h1(t) + lambda*|t|`, and soft
//!   thresholding.
//! * [`losses`] — loss models exposing value/gradient/Lipschitz-bound:
//!   squared loss, the Nesterov-smoothed hinge (SVM), and a small ReLU
//!   network with hand-written backprop.
//! * [`lasso`] — monotone ISTA for the l1-penalized problem, used to
//!   warm-start the nonconvex solver.
//! * [`solver`] — the two-case first-order scheme whose terminal iterates
//!   carry a checkable stationarity certificate (first-order residual plus
//!   the `(0, a*lambda)` exclusion zone on coordinate magnitudes).
//! * [`svm_bench`] — seeded high-dimensional SVM simulation comparing plain,
//!   ridge, l1, and MCP estimators on AR(1)-correlated Gaussian data.
//! * [`nn_experiment`] — a small MCP-regularized ReLU-network training
//!   experiment relating optimization progress to test error.
//!
//! Replication-level parallelism runs on rayon when the `parallel` feature
//! (default) is enabled and falls back to a sequential loop otherwise; all
//! randomness flows through per-replication [`rng`] streams so results are
//! identical either way.

pub mod data;
pub mod lasso;
pub mod losses;
pub mod nn_experiment;
pub mod parallel;
pub mod penalty;
pub mod rng;
pub mod solver;
pub mod svm_bench;
