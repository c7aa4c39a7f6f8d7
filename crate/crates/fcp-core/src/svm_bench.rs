//! Simulation benchmark for high-dimensional linear classification: Gaussian
//! AR(1) features, noisy linear labels, four training variants sharing one
//! smoothed hinge loss (plain gradient descent, ridge, l1, and the
//! folded-concave penalty solved by [`crate::solver::run`] from an l1 warm
//! start), test classification error, and replication-aggregated reporting.
//!
//! Every replication owns RNG streams derived from
//! `(seed, role, p, replication_index)`, so results are byte-identical across
//! schedulings and thread counts; all four variants see the same data within
//! a replication.

use crate::data::{dot, norm1, norm_inf, Dataset, DatasetKind};
use crate::lasso::{solve_lasso, LassoConfig, LassoError};
use crate::losses::{LossError, LossModel, SmoothedSvmLoss, SmoothingParams};
use crate::penalty::{InvalidPenalty, PenaltyParams};
use crate::rng::{role, stream};
use crate::solver::{run, S3oncCertificate, SolverConfig, SolverError};
use rand::Rng;
use rand_distr::StandardNormal;
use std::time::Instant;
use thiserror::Error;

/// The canonical nonzero pattern for the generating coefficients:
/// `(3, 5, 0, 0, 1.5)` followed by zeros, truncated to `p` entries.
pub fn default_beta_star(p: usize) -> Vec<f64> {
    let head = [3.0, 5.0, 0.0, 0.0, 1.5];
    (0..p).map(|j| if j < head.len() { head[j] } else { 0.0 }).collect()
}

/// Simulation design: dimension, sample sizes, replication count, seed, and
/// the feature/label generating process.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub p: usize,
    /// Training sample size (default 100).
    pub n_train: usize,
    /// Held-out sample size used for test error (default 1000).
    pub n_test: usize,
    pub replications: usize,
    pub seed: u64,
    /// AR(1) coefficient of the feature process; `|decay| < 1` gives unit
    /// marginal variances and covariance `decay^|i-j|`.
    pub decay: f64,
    /// True coefficients; length must equal `p`.
    pub beta_star: Vec<f64>,
}

impl SimConfig {
    /// Paper-style defaults: `n_train = 100`, `n_test = 1000`,
    /// `decay = 0.3`, and the canonical sparse `beta_star`.
    pub fn new(p: usize, replications: usize, seed: u64) -> Self {
        SimConfig {
            p,
            n_train: 100,
            n_test: 1000,
            replications,
            seed,
            decay: 0.3,
            beta_star: default_beta_star(p),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.p == 0 {
            return Err(SimError::BadDimension);
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(SimError::BadSampleSize);
        }
        if self.replications == 0 {
            return Err(SimError::BadReplications);
        }
        if !(self.decay.is_finite() && self.decay.abs() < 1.0) {
            return Err(SimError::BadDecay(self.decay));
        }
        if self.beta_star.len() != self.p {
            return Err(SimError::BetaStarLength {
                expected: self.p,
                got: self.beta_star.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("dimension p must be positive")]
    BadDimension,
    #[error("sample sizes must be positive")]
    BadSampleSize,
    #[error("replication count must be positive")]
    BadReplications,
    #[error("AR coefficient must satisfy |decay| < 1, got {0}")]
    BadDecay(f64),
    #[error("beta_star must have length p = {expected}, got {got}")]
    BetaStarLength { expected: usize, got: usize },
    #[error("p_grid must be nonempty")]
    EmptyGrid,
}

/// Draws one dataset of `n` samples: each row follows the AR(1) recursion
/// `x_1 ~ N(0,1)`, `x_j = decay*x_{j-1} + sqrt(1-decay^2)*eps_j`, and the
/// label is `+1` iff `x'beta_star + omega >= 0` with `omega ~ N(0,1)`.
fn sample_dataset(cfg: &SimConfig, replication_index: usize, tag: u64, n: usize) -> Dataset {
    let mut rng = stream(cfg.seed, &[tag, cfg.p as u64, replication_index as u64]);
    let innovation = (1.0 - cfg.decay * cfg.decay).sqrt();
    let mut x = Vec::with_capacity(n * cfg.p);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut prev: f64 = rng.sample(StandardNormal);
        x.push(prev);
        for _ in 1..cfg.p {
            let eps: f64 = rng.sample(StandardNormal);
            prev = cfg.decay * prev + innovation * eps;
            x.push(prev);
        }
        let omega: f64 = rng.sample(StandardNormal);
        let row = &x[x.len() - cfg.p..];
        let margin = dot(row, &cfg.beta_star) + omega;
        y.push(if margin >= 0.0 { 1.0 } else { -1.0 });
    }
    Dataset::new(x, y, n, cfg.p, cfg.seed, DatasetKind::Classification)
        .expect("generated data is finite with sign labels")
}

/// Generates the independent (train, test) pair for one replication,
/// deterministically in `(cfg.seed, cfg.p, replication_index)`.
pub fn generate_dataset(
    cfg: &SimConfig,
    replication_index: usize,
) -> Result<(Dataset, Dataset), SimError> {
    cfg.validate()?;
    let train = sample_dataset(cfg, replication_index, role::SVM_TRAIN, cfg.n_train);
    let test = sample_dataset(cfg, replication_index, role::SVM_TEST, cfg.n_test);
    Ok((train, test))
}

/// The four estimators compared by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    /// Gradient descent on the unpenalized smoothed hinge loss, step `1/M`.
    Plain,
    /// Same loss with ridge term `rho * |beta|^2`.
    L2,
    /// l1-penalized smoothed hinge solved by ISTA.
    L1,
    /// Folded-concave penalty solved by the two-case solver, warm-started at
    /// the l1 solution with the same lambda.
    Fcp,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Plain, Variant::L2, Variant::L1, Variant::Fcp];

    /// Stable lowercase name used in reports and CSV files.
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::L2 => "l2",
            Variant::L1 => "l1",
            Variant::Fcp => "fcp",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-variant hyperparameters; defaults are the benchmark's canonical
/// values.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// Ridge weight for [`Variant::L2`].
    pub rho_l2: f64,
    /// l1 weight for [`Variant::L1`].
    pub lambda_l1: f64,
    /// Folded-concave lambda for [`Variant::Fcp`] (also the warm start's l1
    /// weight).
    pub lambda_fcp: f64,
    /// Requested concavity scale; lowered to `0.99/M` whenever it reaches
    /// `1/M`, since the solver's guarantees need `a < 1/M`.
    pub a_fcp: f64,
    /// Stationarity accuracy passed to the solver.
    pub gamma_hat: f64,
    /// Sup-norm gradient tolerance for the unpenalized/ridge descent.
    pub gd_tol: f64,
    /// Iteration cap for the unpenalized/ridge descent.
    pub gd_max_iter: usize,
    /// Standard deviation of the per-replication random start used by the
    /// descent variants (see [`train_variant`]); the default 1.0 matches the
    /// unit feature scale.
    pub init_sd: f64,
    /// ISTA settings for the l1 solves.
    pub lasso: LassoConfig,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            rho_l2: 0.1,
            lambda_l1: 0.1,
            lambda_fcp: 0.25,
            a_fcp: 0.3,
            gamma_hat: 1e-3,
            gd_tol: 1e-5,
            gd_max_iter: 5000,
            init_sd: 1.0,
            lasso: LassoConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Lasso(#[from] LassoError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Penalty(#[from] InvalidPenalty),
}

/// A fitted variant: the estimate plus enough bookkeeping to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub beta: Vec<f64>,
    /// Iterations of the variant's own algorithm (descent steps, ISTA steps,
    /// or accepted solver transitions).
    pub iterations: usize,
    /// The variant's own objective at `beta` (loss plus its penalty).
    pub objective: f64,
    /// The concavity scale actually used; [`Variant::Fcp`] only.
    pub effective_a: Option<f64>,
    /// Stationarity certificate; [`Variant::Fcp`] only.
    pub certificate: Option<S3oncCertificate>,
    /// The l1 warm start; [`Variant::Fcp`] only.
    pub warm_start: Option<Vec<f64>>,
    pub runtime_seconds: f64,
}

fn gradient_descent(
    loss: &SmoothedSvmLoss<'_>,
    init: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let step = 1.0 / loss.lipschitz_bound();
    let mut beta = init.to_vec();
    for k in 0..max_iter {
        let g = loss.gradient(&beta);
        if norm_inf(&g) <= tol {
            return (beta, k);
        }
        for (b, gj) in beta.iter_mut().zip(&g) {
            *b -= step * gj;
        }
    }
    (beta, max_iter)
}

/// Trains one variant on `train` with smoothing `sp`.
///
/// `init` is the starting point for the descent variants ([`Variant::Plain`]
/// and [`Variant::L2`]). The unpenalized problem is ill-posed for `p >= n`
/// (a continuum of loss-0 interpolators), and gradient descent returns the
/// minimizer determined by its start, so the start is an explicit input: a
/// feature-scale random draw yields a generic, unregularized minimizer,
/// while 0 would silently select the implicitly ridge-like minimal-norm one.
/// The penalized variants define their own starts (ISTA from 0; the
/// folded-concave solver from the matching-lambda l1 warm start) and ignore
/// `init`.
pub fn train_variant(
    variant: Variant,
    train: &Dataset,
    sp: &SmoothingParams,
    hyper: &HyperParams,
    init: &[f64],
) -> Result<TrainOutcome, TrainError> {
    let start = Instant::now();
    let zeros = vec![0.0; train.p()];
    let outcome = match variant {
        Variant::Plain | Variant::L2 => {
            let rho = if variant == Variant::L2 { hyper.rho_l2 } else { 0.0 };
            let loss = SmoothedSvmLoss::new(train, rho, *sp)?;
            let (beta, iterations) =
                gradient_descent(&loss, init, hyper.gd_tol, hyper.gd_max_iter);
            let objective = loss.value(&beta);
            TrainOutcome {
                beta,
                iterations,
                objective,
                effective_a: None,
                certificate: None,
                warm_start: None,
                runtime_seconds: 0.0,
            }
        }
        Variant::L1 => {
            let loss = SmoothedSvmLoss::new(train, 0.0, *sp)?;
            let fit = solve_lasso(&loss, hyper.lambda_l1, &hyper.lasso, &zeros)?;
            let objective = loss.value(&fit.beta) + hyper.lambda_l1 * norm1(&fit.beta);
            TrainOutcome {
                beta: fit.beta,
                iterations: fit.iterations,
                objective,
                effective_a: None,
                certificate: None,
                warm_start: None,
                runtime_seconds: 0.0,
            }
        }
        Variant::Fcp => {
            let loss = SmoothedSvmLoss::new(train, 0.0, *sp)?;
            let m = loss.lipschitz_bound();
            let a = if hyper.a_fcp * m < 1.0 {
                hyper.a_fcp
            } else {
                (0.99 / m).min(hyper.a_fcp)
            };
            let params = PenaltyParams::new(hyper.lambda_fcp, a)?;
            let warm = solve_lasso(&loss, hyper.lambda_fcp, &hyper.lasso, &zeros)?.beta;
            let cfg = SolverConfig::new(hyper.gamma_hat, 1.0 / m, m)?;
            let fit = run(&loss, &params, &cfg, &warm)?;
            let objective = *fit.objective_trace.last().expect("nonempty trace");
            TrainOutcome {
                beta: fit.beta,
                iterations: fit.iterations,
                objective,
                effective_a: Some(a),
                certificate: Some(fit.certificate),
                warm_start: Some(warm),
                runtime_seconds: 0.0,
            }
        }
    };
    Ok(TrainOutcome {
        runtime_seconds: start.elapsed().as_secs_f64(),
        ..outcome
    })
}

/// Fraction of samples whose predicted sign disagrees with the label, with
/// zero margins predicted `+1`.
pub fn classification_error(beta: &[f64], data: &Dataset) -> f64 {
    assert_eq!(data.kind, DatasetKind::Classification);
    assert_eq!(beta.len(), data.p());
    let wrong = (0..data.n())
        .filter(|&i| {
            let pred = if dot(data.row(i), beta) >= 0.0 { 1.0 } else { -1.0 };
            pred != data.y()[i]
        })
        .count();
    wrong as f64 / data.n() as f64
}

/// One variant's fate within a replication.
#[derive(Debug)]
pub struct VariantResult {
    pub variant: Variant,
    pub outcome: Result<TrainOutcome, TrainError>,
    /// Held-out classification error; present iff training succeeded.
    pub test_error: Option<f64>,
}

/// All four variants trained on one replication's data.
#[derive(Debug)]
pub struct ReplicationOutcome {
    pub p: usize,
    pub replication: usize,
    pub results: Vec<VariantResult>,
}

/// Generates the replication's data, draws the replication's descent
/// initialization from its own stream, and trains every variant.
/// Precondition: `cfg` is valid (checked; panics otherwise — validate
/// upstream for recoverable handling).
pub fn run_replication(cfg: &SimConfig, replication: usize, hyper: &HyperParams) -> ReplicationOutcome {
    let (train, test) = generate_dataset(cfg, replication).expect("valid SimConfig");
    let sp = SmoothingParams::for_sample_size(train.n());
    let mut init_rng = stream(
        cfg.seed,
        &[role::SVM_INIT, cfg.p as u64, replication as u64],
    );
    let init: Vec<f64> = (0..cfg.p)
        .map(|_| hyper.init_sd * init_rng.sample::<f64, _>(StandardNormal))
        .collect();
    let results = Variant::ALL
        .iter()
        .map(|&variant| {
            let outcome = train_variant(variant, &train, &sp, hyper, &init);
            let test_error = outcome
                .as_ref()
                .ok()
                .map(|out| classification_error(&out.beta, &test));
            VariantResult {
                variant,
                outcome,
                test_error,
            }
        })
        .collect();
    ReplicationOutcome {
        p: cfg.p,
        replication,
        results,
    }
}

/// One successful (variant, p, replication) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailRow {
    pub variant: Variant,
    pub p: usize,
    pub replication: usize,
    pub seed: u64,
    pub test_error: f64,
    pub iterations: usize,
    pub objective: f64,
    pub effective_a: Option<f64>,
}

/// Aggregate over the successful replications of one (variant, p) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: Variant,
    pub p: usize,
    pub mean_error_percent: f64,
    /// Standard error of the mean (sample sd over sqrt(count)); 0 for a
    /// single replication.
    pub se_percent: f64,
    /// Number of successful replications aggregated (a value below the
    /// requested count flags an incomplete cell).
    pub replications: usize,
    pub mean_iterations: f64,
    pub mean_runtime_seconds: f64,
}

/// A recorded per-replication failure (the benchmark continues).
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub variant: Variant,
    pub p: usize,
    pub replication: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportMetadata {
    /// Hinge smoothing width `mu = n_train^(-delta)`.
    pub smoothing_mu: f64,
    /// Worst-case per-sample gap between smoothed and exact hinge: `mu/2`.
    pub per_sample_smoothing_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    /// Summaries sorted by (variant, p).
    pub rows: Vec<SummaryRow>,
    /// Successful cells sorted by (variant, p, replication).
    pub details: Vec<DetailRow>,
    pub failures: Vec<Failure>,
    pub metadata: ReportMetadata,
}

/// Runs the full grid: for each `p` in `p_grid`, `cfg.replications`
/// replications of all four variants on common random data. The template's
/// `p`/`beta_star` are replaced per grid entry (`beta_star` by the canonical
/// pattern). Replications run in parallel; aggregation is a deterministic
/// single-threaded reduction, so reports are identical across thread counts.
pub fn run_benchmark(base: &SimConfig, p_grid: &[usize]) -> Result<BenchmarkReport, SimError> {
    if p_grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    let hyper = HyperParams::default();
    run_benchmark_with(base, p_grid, &hyper)
}

/// [`run_benchmark`] with explicit hyperparameters.
pub fn run_benchmark_with(
    base: &SimConfig,
    p_grid: &[usize],
    hyper: &HyperParams,
) -> Result<BenchmarkReport, SimError> {
    if p_grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    let mut details = Vec::new();
    let mut failures = Vec::new();
    let mut runtimes: Vec<(Variant, usize, f64)> = Vec::new();
    for &p in p_grid {
        let cfg = SimConfig {
            p,
            beta_star: default_beta_star(p),
            ..base.clone()
        };
        cfg.validate()?;
        let outcomes = crate::parallel::map_indexed(cfg.replications, |rep| {
            run_replication(&cfg, rep, hyper)
        });
        for outcome in outcomes {
            for r in outcome.results {
                match r.outcome {
                    Ok(out) => {
                        details.push(DetailRow {
                            variant: r.variant,
                            p,
                            replication: outcome.replication,
                            seed: cfg.seed,
                            test_error: r.test_error.expect("success has a test error"),
                            iterations: out.iterations,
                            objective: out.objective,
                            effective_a: out.effective_a,
                        });
                        runtimes.push((r.variant, p, out.runtime_seconds));
                    }
                    Err(e) => failures.push(Failure {
                        variant: r.variant,
                        p,
                        replication: outcome.replication,
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }
    details.sort_by_key(|d| (d.variant, d.p, d.replication));
    failures.sort_by_key(|f| (f.variant, f.p, f.replication));

    let mut rows = Vec::new();
    for &variant in &Variant::ALL {
        for &p in p_grid {
            let cell: Vec<&DetailRow> = details
                .iter()
                .filter(|d| d.variant == variant && d.p == p)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let k = cell.len() as f64;
            let errs: Vec<f64> = cell.iter().map(|d| d.test_error * 100.0).collect();
            let mean = errs.iter().sum::<f64>() / k;
            let se = if cell.len() > 1 {
                let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            } else {
                0.0
            };
            let mean_iterations = cell.iter().map(|d| d.iterations as f64).sum::<f64>() / k;
            let mean_runtime_seconds = runtimes
                .iter()
                .filter(|(v, rp, _)| *v == variant && *rp == p)
                .map(|(_, _, t)| t)
                .sum::<f64>()
                / k;
            rows.push(SummaryRow {
                variant,
                p,
                mean_error_percent: mean,
                se_percent: se,
                replications: cell.len(),
                mean_iterations,
                mean_runtime_seconds,
            });
        }
    }
    rows.sort_by_key(|r| (r.variant, r.p));

    let mu = SmoothingParams::for_sample_size(base.n_train).mu;
    Ok(BenchmarkReport {
        rows,
        details,
        failures,
        metadata: ReportMetadata {
            smoothing_mu: mu,
            per_sample_smoothing_error: mu / 2.0,
        },
    })
}
