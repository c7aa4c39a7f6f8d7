//! Synthetic regression experiment on a small ReLU network trained with the
//! folded-concave-penalized two-case solver.
//!
//! The experiment draws inputs uniformly from the unit cube, labels them with
//! a polynomial target plus Gaussian noise, and trains a multilayer
//! perceptron by applying [`crate::solver::run`] directly to the nonconvex
//! network loss with an MCP penalty on every weight and bias. Because the
//! exact gradient-Lipschitz constant of a ReLU network is unavailable, the
//! curvature input `M` is the sampled estimate from
//! [`crate::losses::sampled_lipschitz`]; the penalty concavity is then fixed
//! at `a = 0.5 / M` and the step size at `1 / M`, which keeps every
//! stationarity guarantee of the solver intact *conditional on the estimate
//! bounding the true local curvature*.
//!
//! [`suboptimality_vs_generalization_sweep`] relates optimization quality to
//! generalization: it snapshots the first iterate whose penalized objective
//! falls below each requested stop level and records the held-out mean
//! squared error of every snapshot. [`run_experiment`] repeats this over
//! independent replications and correlates the per-level medians.
//!
//! # Concurrency
//!
//! Replications run via [`crate::parallel::map_indexed`] and draw from
//! dedicated RNG streams keyed by `(seed, role, replication)`, so reports are
//! byte-identical regardless of thread count.

use crate::data::{DataError, Dataset, DatasetKind};
use crate::losses::{mlp_forward, sampled_lipschitz, LossError, MLPArchitecture, MlpLoss};
use crate::parallel;
use crate::penalty::{InvalidPenalty, PenaltyParams};
use crate::rng::{role, stream};
use crate::solver::{run_with_observer, SolverConfig, SolverError, SolverResult};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// One monomial `coefficient * prod_j x_j^{exponents[j]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub coefficient: f64,
    /// One exponent per input coordinate.
    pub exponents: Vec<u32>,
}

/// A multivariate polynomial given as a sum of monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSpec {
    pub terms: Vec<PolyTerm>,
}

impl PolynomialSpec {
    /// Evaluates the polynomial. Panics if a term's exponent list does not
    /// match the input dimension.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                assert_eq!(t.exponents.len(), x.len(), "exponent arity mismatch");
                t.coefficient
                    * x.iter()
                        .zip(&t.exponents)
                        .map(|(v, &e)| v.powi(e as i32))
                        .product::<f64>()
            })
            .sum()
    }
}

/// The ground-truth regression function.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetFunction {
    Polynomial(PolynomialSpec),
}

impl TargetFunction {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            TargetFunction::Polynomial(g) => g.evaluate(x),
        }
    }
}

/// Full description of one experiment: data law, network, penalty strength,
/// and solver tolerances. The input dimension is `arch.input_dim()`; the
/// penalty concavity `a = 0.5 / M` and step size `1 / M` are derived at
/// training time from the sampled curvature estimate `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct NNExperimentConfig {
    pub arch: MLPArchitecture,
    pub n_train: usize,
    pub n_test: usize,
    /// Standard deviation of the additive Gaussian label noise.
    pub noise_sd: f64,
    pub target: TargetFunction,
    /// Weights initialize as iid `N(0, init_sd^2)`.
    pub init_sd: f64,
    /// MCP strength applied to every network parameter.
    pub lambda: f64,
    /// Stationarity tolerance passed to the solver.
    pub gamma_hat: f64,
    /// Half-width of the box in which the curvature estimate samples.
    pub lipschitz_radius: f64,
    pub lipschitz_probes: usize,
    /// Iteration cap; `None` uses the solver's own worst-case bound.
    pub max_iter: Option<usize>,
    pub seed: u64,
}

/// Default progress fractions for [`run_experiment`]: five interior
/// snapshots plus the terminal iterate.
pub const DEFAULT_LEVELS: [f64; 6] = [0.5, 0.25, 0.12, 0.06, 0.03, 0.0];

impl NNExperimentConfig {
    /// The network used by the reference experiment: a 4-16-16-1 ReLU
    /// regressor (369 parameters) trained on 60 noisy samples of a
    /// degree-two polynomial.
    pub fn default_config(seed: u64) -> Self {
        NNExperimentConfig {
            arch: MLPArchitecture::new(vec![4, 16, 16, 1]).expect("valid architecture"),
            n_train: 60,
            n_test: 200,
            noise_sd: 0.5,
            target: TargetFunction::Polynomial(PolynomialSpec {
                terms: vec![
                    PolyTerm { coefficient: 2.0, exponents: vec![1, 1, 0, 0] },
                    PolyTerm { coefficient: 1.0, exponents: vec![0, 0, 2, 0] },
                    PolyTerm { coefficient: -1.0, exponents: vec![0, 0, 0, 1] },
                    PolyTerm { coefficient: 1.0, exponents: vec![0, 0, 0, 0] },
                ],
            }),
            init_sd: 0.1,
            lambda: 0.02,
            gamma_hat: 0.1,
            lipschitz_radius: 0.5,
            lipschitz_probes: 300,
            max_iter: Some(400_000),
            seed,
        }
    }

    fn validate(&self) -> Result<(), NnError> {
        if self.n_train == 0 || self.n_test == 0 {
            return Err(NnError::Config("sample sizes must be positive"));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(NnError::Config("noise_sd must be finite and nonnegative"));
        }
        if !(self.init_sd >= 0.0 && self.init_sd.is_finite()) {
            return Err(NnError::Config("init_sd must be finite and nonnegative"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(NnError::Config("lambda must be positive and finite"));
        }
        let TargetFunction::Polynomial(g) = &self.target;
        if g.terms.iter().any(|t| t.exponents.len() != self.arch.input_dim()) {
            return Err(NnError::Config("polynomial arity must match the input dimension"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("invalid experiment configuration: {0}")]
    Config(&'static str),
    #[error("stop objectives must be non-empty, finite, and strictly decreasing")]
    StopsNotDecreasing,
    #[error("levels must be non-empty, strictly decreasing, and within [0, 1]")]
    BadLevels,
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Penalty(#[from] InvalidPenalty),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn sample_half(
    cfg: &NNExperimentConfig,
    replication: usize,
    role_tag: u64,
    n: usize,
) -> Result<Dataset, NnError> {
    let d = cfg.arch.input_dim();
    let mut rng = stream(cfg.seed, &[role_tag, replication as u64]);
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row_start = x.len();
        for _ in 0..d {
            x.push(rng.gen::<f64>());
        }
        let g = cfg.target.evaluate(&x[row_start..]);
        let w: f64 = StandardNormal.sample(&mut rng);
        y.push(g + cfg.noise_sd * w);
    }
    Ok(Dataset::new(x, y, n, d, cfg.seed, DatasetKind::Regression)?)
}

/// Draws the (train, test) pair for one replication: inputs uniform on
/// `[0,1]^d`, targets `g(x) + noise`, from streams keyed by
/// `(seed, role, replication)` so the two halves are independent and every
/// replication is reproducible in isolation.
pub fn generate_regression_data(
    cfg: &NNExperimentConfig,
    replication: usize,
) -> Result<(Dataset, Dataset), NnError> {
    cfg.validate()?;
    let train = sample_half(cfg, replication, role::NN_TRAIN, cfg.n_train)?;
    let test = sample_half(cfg, replication, role::NN_TEST, cfg.n_test)?;
    Ok((train, test))
}

fn initial_weights(cfg: &NNExperimentConfig, replication: usize) -> Vec<f64> {
    let mut rng = stream(cfg.seed, &[role::NN_INIT, replication as u64]);
    (0..cfg.arch.param_count())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            cfg.init_sd * z
        })
        .collect()
}

/// A finished training run plus the run-derived curvature and penalty
/// objects needed to audit it.
#[derive(Debug, Clone)]
pub struct NnTrainOutcome {
    pub result: SolverResult,
    /// Sampled curvature estimate used as the solver's `M`.
    pub m: f64,
    pub params: PenaltyParams,
    pub solver: SolverConfig,
}

fn solver_inputs(
    cfg: &NNExperimentConfig,
    train: &Dataset,
) -> Result<(f64, PenaltyParams, SolverConfig), NnError> {
    let m = sampled_lipschitz(
        &cfg.arch,
        train,
        cfg.lipschitz_radius,
        cfg.seed,
        cfg.lipschitz_probes,
    );
    let params = PenaltyParams::new(cfg.lambda, 0.5 / m)?;
    let mut solver = SolverConfig::new(cfg.gamma_hat, 1.0 / m, m)?;
    solver.max_iter = cfg.max_iter;
    Ok((m, params, solver))
}

/// Trains the network of `cfg` for one replication: Gaussian initialization,
/// MCP on every parameter, and the two-case solver run to stationarity.
pub fn train_fcp_nn(
    cfg: &NNExperimentConfig,
    replication: usize,
) -> Result<NnTrainOutcome, NnError> {
    cfg.validate()?;
    let train = sample_half(cfg, replication, role::NN_TRAIN, cfg.n_train)?;
    let (m, params, solver) = solver_inputs(cfg, &train)?;
    let loss = MlpLoss::new(cfg.arch.clone(), &train, m)?;
    let beta0 = initial_weights(cfg, replication);
    let result = run_with_observer(&loss, &params, &solver, &beta0, |_, _, _| {})?;
    Ok(NnTrainOutcome { result, m, params, solver })
}

/// Replays the deterministic training trajectory of `(cfg, replication)` and
/// returns the iterates at the requested iteration indices, in the order
/// given. Indices beyond the trajectory end are simply absent from the
/// replay and panic; callers pass indices read off a prior run's trace.
pub fn snapshot_iterates(
    cfg: &NNExperimentConfig,
    replication: usize,
    iterations: &[usize],
) -> Result<Vec<Vec<f64>>, NnError> {
    cfg.validate()?;
    let train = sample_half(cfg, replication, role::NN_TRAIN, cfg.n_train)?;
    let (m, params, solver) = solver_inputs(cfg, &train)?;
    let loss = MlpLoss::new(cfg.arch.clone(), &train, m)?;
    let beta0 = initial_weights(cfg, replication);
    let mut captured: Vec<Option<Vec<f64>>> = vec![None; iterations.len()];
    run_with_observer(&loss, &params, &solver, &beta0, |k, beta, _| {
        for (slot, &want) in captured.iter_mut().zip(iterations) {
            if want == k {
                *slot = Some(beta.to_vec());
            }
        }
    })?;
    Ok(captured
        .into_iter()
        .zip(iterations)
        .map(|(slot, &want)| slot.unwrap_or_else(|| panic!("iteration {want} not on the trajectory")))
        .collect())
}

/// Mean squared prediction error of the network `beta` on `data`.
pub fn test_mse(arch: &MLPArchitecture, beta: &[f64], data: &Dataset) -> f64 {
    assert_eq!(data.p(), arch.input_dim(), "input dimension mismatch");
    let mut acc = 0.0;
    for i in 0..data.n() {
        let r = mlp_forward(arch, beta, data.row(i)) - data.y()[i];
        acc += r * r;
    }
    acc / data.n() as f64
}

/// One snapshot of the objective-versus-generalization sweep: the first
/// iterate whose penalized objective fell to `stop_objective` or below.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub stop_objective: f64,
    pub iteration: usize,
    /// The snapshot's actual penalized objective (`<= stop_objective`).
    pub objective: f64,
    /// Held-out mean squared error of the snapshot network.
    pub test_mse: f64,
}

/// Result of [`suboptimality_vs_generalization_sweep`]: one point per
/// reached stop objective, the stops the trajectory never reached, and the
/// underlying training run.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub unreached: Vec<f64>,
    pub outcome: NnTrainOutcome,
}

fn validate_stops(stops: &[f64]) -> Result<(), NnError> {
    if stops.is_empty() || stops.windows(2).any(|w| w[1] >= w[0]) {
        return Err(NnError::StopsNotDecreasing);
    }
    if stops.iter().any(|s| !s.is_finite()) {
        return Err(NnError::Config("stop objectives must be finite"));
    }
    Ok(())
}

fn sweep_with_outcome(
    cfg: &NNExperimentConfig,
    replication: usize,
    outcome: NnTrainOutcome,
    stops: &[f64],
) -> Result<SweepOutcome, NnError> {
    let trace = &outcome.result.objective_trace;
    let mut reached: Vec<(f64, usize)> = Vec::new(); // (stop, first crossing)
    let mut unreached = Vec::new();
    for &stop in stops {
        match trace.iter().position(|&v| v <= stop) {
            Some(k) => reached.push((stop, k)),
            None => unreached.push(stop),
        }
    }
    let picks: Vec<usize> = reached.iter().map(|&(_, k)| k).collect();
    let snapshots = snapshot_iterates(cfg, replication, &picks)?;
    let test = sample_half(cfg, replication, role::NN_TEST, cfg.n_test)?;
    let points = reached
        .iter()
        .zip(&snapshots)
        .map(|(&(stop, k), beta)| SweepPoint {
            stop_objective: stop,
            iteration: k,
            objective: trace[k],
            test_mse: test_mse(&cfg.arch, beta, &test),
        })
        .collect();
    Ok(SweepOutcome { points, unreached, outcome })
}

/// Trains once, snapshots the first iterate whose penalized objective falls
/// to each stop level or below, and reports every snapshot's held-out mean
/// squared error. Stop levels must be strictly decreasing, so the returned
/// points have nonincreasing objectives and nondecreasing iteration indices;
/// a final stop at the terminal objective makes the terminal iterate the
/// last, lowest-objective point. Stops below the whole trajectory are
/// reported in `unreached` rather than silently dropped.
pub fn suboptimality_vs_generalization_sweep(
    cfg: &NNExperimentConfig,
    replication: usize,
    stop_objectives: &[f64],
) -> Result<SweepOutcome, NnError> {
    validate_stops(stop_objectives)?;
    let outcome = train_fcp_nn(cfg, replication)?;
    sweep_with_outcome(cfg, replication, outcome, stop_objectives)
}

/// Aggregated sweep over independent replications. Snapshot levels are
/// per-replication interpolants `terminal + t * (initial - terminal)` for
/// the shared fractions in `levels`, making level indices comparable across
/// replications; `per_level` medians are taken over replications and
/// correlated by rank.
#[derive(Debug, Clone)]
pub struct NnExperimentReport {
    pub per_replication: Vec<SweepOutcome>,
    pub levels: Vec<f64>,
    pub median_objective_per_level: Vec<f64>,
    pub median_test_mse_per_level: Vec<f64>,
    /// Rank correlation between the two median sequences.
    pub spearman: f64,
}

fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Average-rank Spearman correlation (Pearson correlation of midranks).
/// Panics on length mismatch or fewer than two points; returns NaN when
/// either sequence is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "length mismatch");
    assert!(x.len() >= 2, "need at least two points");
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("finite values"));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Runs `replications` independent sweeps and correlates optimization
/// quality with generalization. `levels` are progress fractions in `[0, 1]`,
/// strictly decreasing (include `0.0` to snapshot the terminal iterate);
/// each replication's stop objectives interpolate between its own initial
/// and terminal objective, so every level is reached by construction.
pub fn run_experiment(
    cfg: &NNExperimentConfig,
    replications: usize,
    levels: &[f64],
) -> Result<NnExperimentReport, NnError> {
    cfg.validate()?;
    if replications == 0 {
        return Err(NnError::Config("need at least one replication"));
    }
    if levels.is_empty()
        || levels.windows(2).any(|w| w[1] >= w[0])
        || levels.iter().any(|t| !(0.0..=1.0).contains(t))
    {
        return Err(NnError::BadLevels);
    }
    let sweeps: Vec<Result<SweepOutcome, NnError>> =
        parallel::map_indexed(replications, |rep| {
            let outcome = train_fcp_nn(cfg, rep)?;
            let trace = &outcome.result.objective_trace;
            let first = trace[0];
            let last = *trace.last().expect("trace is never empty");
            // A non-descending run collapses every level onto the terminal
            // objective, which is always reached.
            let span = (first - last).max(0.0);
            let stops: Vec<f64> = levels.iter().map(|t| last + t * span).collect();
            if span == 0.0 {
                // Zero progress span: every level is the terminal objective.
                let one = sweep_with_outcome(cfg, rep, outcome, &[last])?;
                let point = one.points[0].clone();
                return Ok(SweepOutcome {
                    points: vec![point; levels.len()],
                    unreached: Vec::new(),
                    outcome: one.outcome,
                });
            }
            sweep_with_outcome(cfg, rep, outcome, &stops)
        });
    let mut per_replication = Vec::with_capacity(replications);
    for sweep in sweeps {
        per_replication.push(sweep?);
    }

    let mut median_objective_per_level = Vec::with_capacity(levels.len());
    let mut median_test_mse_per_level = Vec::with_capacity(levels.len());
    for i in 0..levels.len() {
        let mut objs: Vec<f64> =
            per_replication.iter().map(|s| s.points[i].objective).collect();
        let mut mses: Vec<f64> =
            per_replication.iter().map(|s| s.points[i].test_mse).collect();
        median_objective_per_level.push(median(&mut objs));
        median_test_mse_per_level.push(median(&mut mses));
    }
    let rho = spearman(&median_objective_per_level, &median_test_mse_per_level);
    Ok(NnExperimentReport {
        per_replication,
        levels: levels.to_vec(),
        median_objective_per_level,
        median_test_mse_per_level,
        spearman: rho,
    })
}
