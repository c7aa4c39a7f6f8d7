//! The four subcommands: experiment drivers (`svm-bench`, `nn-train`), a
//! one-shot penalized solver (`solve`), and a stationarity checker (`check`).

use crate::config::{parse_list, resolve, Config};
use crate::output::{create_output, fmt_float, write_row};
use crate::{Failure, RunManifest};
use fcp_core::data::{Dataset, DatasetKind};
use fcp_core::losses::{LossModel, SmoothedSvmLoss, SmoothingParams, SquaredLoss};
use fcp_core::nn_experiment::{
    run_experiment, NNExperimentConfig, NnError, PolynomialSpec, TargetFunction, DEFAULT_LEVELS,
};
use fcp_core::penalty::PenaltyParams;
use fcp_core::solver::{check_s3onc, run, S3oncCertificate, SolverConfig};
use fcp_core::svm_bench::{run_benchmark_with, HyperParams, SimConfig};
use std::path::{Path, PathBuf};

// ---------------------------------------------------------------------------
// svm-bench
// ---------------------------------------------------------------------------

pub struct SvmBenchSettings {
    pub p_grid: Option<Vec<usize>>,
    pub replications: Option<usize>,
    pub rho: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_l1: Option<f64>,
    pub a: Option<f64>,
    pub gamma_hat: Option<f64>,
}

pub const SVM_BENCH_KEYS: &[&str] = &[
    "seed", "out", "threads", "p_grid", "replications", "rho", "lambda", "lambda_l1", "a",
    "gamma_hat", "n_train", "n_test", "decay",
];

pub fn cmd_svm_bench(
    manifest: &RunManifest,
    cfg_file: &Config,
    args: SvmBenchSettings,
) -> Result<(), Failure> {
    let p_grid = resolve(args.p_grid, cfg_file.get_list("p_grid")?, vec![100, 200, 500]);
    let replications = resolve(args.replications, cfg_file.get("replications")?, 20);
    let defaults = HyperParams::default();
    let hyper = HyperParams {
        rho_l2: resolve(args.rho, cfg_file.get("rho")?, defaults.rho_l2),
        lambda_l1: resolve(args.lambda_l1, cfg_file.get("lambda_l1")?, defaults.lambda_l1),
        lambda_fcp: resolve(args.lambda, cfg_file.get("lambda")?, defaults.lambda_fcp),
        a_fcp: resolve(args.a, cfg_file.get("a")?, defaults.a_fcp),
        gamma_hat: resolve(args.gamma_hat, cfg_file.get("gamma_hat")?, defaults.gamma_hat),
        ..defaults
    };
    let template_p = p_grid.first().copied().unwrap_or(0);
    let mut base = SimConfig::new(template_p.max(1), replications, manifest.seed);
    if let Some(n_train) = cfg_file.get("n_train")? {
        base.n_train = n_train;
    }
    if let Some(n_test) = cfg_file.get("n_test")? {
        base.n_test = n_test;
    }
    if let Some(decay) = cfg_file.get("decay")? {
        base.decay = decay;
    }
    if p_grid.contains(&0) {
        return Err(Failure::Invalid("p_grid entries must be positive".into()));
    }

    // Everything that determines the numbers, nothing that only affects how
    // fast they were computed.
    let resolved: Vec<(&str, String)> = vec![
        ("a", fmt_float(hyper.a_fcp)),
        ("decay", fmt_float(base.decay)),
        ("gamma_hat", fmt_float(hyper.gamma_hat)),
        ("lambda", fmt_float(hyper.lambda_fcp)),
        ("lambda_l1", fmt_float(hyper.lambda_l1)),
        ("n_test", base.n_test.to_string()),
        ("n_train", base.n_train.to_string()),
        (
            "p_grid",
            p_grid.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","),
        ),
        ("replications", replications.to_string()),
        ("rho", fmt_float(hyper.rho_l2)),
    ];

    let report = run_benchmark_with(&base, &p_grid, &hyper)
        .map_err(|e| Failure::Invalid(e.to_string()))?;

    let detail_path = manifest.output_path.join("svm_bench.csv");
    let mut w = create_output(&detail_path, &resolved, manifest.seed)?;
    write_row(
        &mut w,
        &detail_path,
        &"variant,p,replication,seed,test_error,iterations,objective,effective_a"
            .split(',')
            .map(String::from)
            .collect::<Vec<_>>(),
    )?;
    for d in &report.details {
        write_row(
            &mut w,
            &detail_path,
            &[
                d.variant.to_string(),
                d.p.to_string(),
                d.replication.to_string(),
                d.seed.to_string(),
                fmt_float(d.test_error),
                d.iterations.to_string(),
                fmt_float(d.objective),
                d.effective_a.map(fmt_float).unwrap_or_default(),
            ],
        )?;
    }
    drop(w);

    let summary_path = manifest.output_path.join("svm_bench_summary.csv");
    let mut w = create_output(&summary_path, &resolved, manifest.seed)?;
    write_row(
        &mut w,
        &summary_path,
        &["variant".into(), "p".into(), "mean".into(), "se".into()],
    )?;
    for r in &report.rows {
        write_row(
            &mut w,
            &summary_path,
            &[
                r.variant.to_string(),
                r.p.to_string(),
                fmt_float(r.mean_error_percent),
                fmt_float(r.se_percent),
            ],
        )?;
    }
    drop(w);

    println!("wrote {}", detail_path.display());
    println!("wrote {}", summary_path.display());
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(format!(
            "{} of {} replications failed; partial results written",
            report.failures.len(),
            p_grid.len() * replications * 4
        )))
    }
}

// ---------------------------------------------------------------------------
// nn-train
// ---------------------------------------------------------------------------

pub struct NnTrainSettings {
    pub replications: Option<usize>,
    pub lambda: Option<f64>,
    pub gamma_hat: Option<f64>,
    pub noise_sd: Option<f64>,
}

pub const NN_TRAIN_KEYS: &[&str] = &[
    "seed", "out", "threads", "replications", "lambda", "gamma_hat", "noise_sd", "levels",
];

fn poly_string(spec: &PolynomialSpec) -> String {
    if spec.terms.is_empty() {
        return "0".into();
    }
    spec.terms
        .iter()
        .map(|t| {
            let mut s = fmt_float(t.coefficient);
            for (j, &e) in t.exponents.iter().enumerate() {
                if e > 0 {
                    s.push_str(&format!("*x{}^{e}", j + 1));
                }
            }
            s
        })
        .collect::<Vec<_>>()
        .join("+")
}

pub fn cmd_nn_train(
    manifest: &RunManifest,
    cfg_file: &Config,
    args: NnTrainSettings,
) -> Result<(), Failure> {
    let mut cfg = NNExperimentConfig::default_config(manifest.seed);
    cfg.lambda = resolve(args.lambda, cfg_file.get("lambda")?, cfg.lambda);
    cfg.gamma_hat = resolve(args.gamma_hat, cfg_file.get("gamma_hat")?, cfg.gamma_hat);
    cfg.noise_sd = resolve(args.noise_sd, cfg_file.get("noise_sd")?, cfg.noise_sd);
    let replications = resolve(args.replications, cfg_file.get("replications")?, 20);
    let levels = cfg_file.get_list("levels")?.unwrap_or_else(|| DEFAULT_LEVELS.to_vec());

    let TargetFunction::Polynomial(target) = &cfg.target;
    let resolved: Vec<(&str, String)> = vec![
        (
            "arch",
            cfg.arch.layer_sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
        ),
        ("gamma_hat", fmt_float(cfg.gamma_hat)),
        ("init_sd", fmt_float(cfg.init_sd)),
        ("lambda", fmt_float(cfg.lambda)),
        (
            "levels",
            levels.iter().map(|&t| fmt_float(t)).collect::<Vec<_>>().join(","),
        ),
        ("lipschitz_probes", cfg.lipschitz_probes.to_string()),
        ("lipschitz_radius", fmt_float(cfg.lipschitz_radius)),
        ("n_test", cfg.n_test.to_string()),
        ("n_train", cfg.n_train.to_string()),
        ("noise_sd", fmt_float(cfg.noise_sd)),
        ("replications", replications.to_string()),
        ("target", poly_string(target)),
    ];

    let report = run_experiment(&cfg, replications, &levels).map_err(|e| match e {
        NnError::Config(_) | NnError::BadLevels | NnError::StopsNotDecreasing => {
            Failure::Invalid(e.to_string())
        }
        other => Failure::Partial(other.to_string()),
    })?;

    let path = manifest.output_path.join("nn_sweep.csv");
    let mut w = create_output(&path, &resolved, manifest.seed)?;
    write_row(
        &mut w,
        &path,
        &["objective".into(), "test_mse".into(), "replication".into()],
    )?;
    for (rep, sweep) in report.per_replication.iter().enumerate() {
        for point in &sweep.points {
            write_row(
                &mut w,
                &path,
                &[fmt_float(point.objective), fmt_float(point.test_mse), rep.to_string()],
            )?;
        }
    }
    drop(w);

    println!("wrote {}", path.display());
    println!(
        "nn-train: replications={replications} levels={} spearman={}",
        levels.len(),
        fmt_float(report.spearman)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// solve / check shared input handling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Squared,
    SmoothedHinge,
}

impl std::str::FromStr for LossKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "squared" => Ok(LossKind::Squared),
            "smoothed_hinge" => Ok(LossKind::SmoothedHinge),
            other => Err(format!("unknown loss `{other}` (expected squared or smoothed_hinge)")),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Squared => "squared",
            LossKind::SmoothedHinge => "smoothed_hinge",
        })
    }
}

/// Reads a dataset CSV: header row, response in the first column, features
/// in the remaining columns.
fn read_dataset(path: &Path, kind: LossKind) -> Result<Dataset, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let columns = headers.len();
    if columns < 2 {
        return Err(Failure::Invalid(format!(
            "{}: need a response column plus at least one feature column, got {columns}",
            path.display()
        )));
    }
    let p = columns - 1;
    let mut y = Vec::new();
    let mut x = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        if record.len() != columns {
            return Err(Failure::Invalid(format!(
                "{}: row {}: expected {columns} fields, got {}",
                path.display(),
                i + 2,
                record.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Failure::Invalid(format!(
                    "{}: row {}, column {}: `{field}` is not a number",
                    path.display(),
                    i + 2,
                    j + 1
                ))
            })?;
            if j == 0 {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    let n = y.len();
    let data_kind = match kind {
        LossKind::Squared => DatasetKind::Regression,
        LossKind::SmoothedHinge => DatasetKind::Classification,
    };
    Dataset::new(x, y, n, p, 0, data_kind)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

pub struct ProblemSettings {
    pub input: Option<PathBuf>,
    pub loss: Option<LossKind>,
    pub lambda: Option<f64>,
    pub a: Option<f64>,
    pub rho: Option<f64>,
    pub alpha_hat: Option<f64>,
    pub gamma_hat: Option<f64>,
    /// `check` only: the candidate vector.
    pub beta: Option<Vec<f64>>,
}

pub const SOLVE_KEYS: &[&str] = &[
    "seed", "out", "threads", "input", "loss", "lambda", "a", "rho", "alpha_hat", "gamma_hat",
    "max_iter",
];

pub const CHECK_KEYS: &[&str] = &[
    "seed", "out", "threads", "input", "loss", "lambda", "a", "rho", "gamma_hat", "beta",
];

struct Problem {
    data: Dataset,
    loss_kind: LossKind,
    lambda: f64,
    a: f64,
    rho: f64,
    gamma_hat: f64,
}

/// Resolves the shared solve/check inputs; `a` defaults to half the
/// stability limit `1/M` once the loss curvature is known.
fn assemble_problem(cfg_file: &Config, args: &ProblemSettings) -> Result<Problem, Failure> {
    let input = args
        .input
        .clone()
        .or(cfg_file.get::<PathBuf>("input")?)
        .ok_or_else(|| Failure::Invalid("no input CSV given (use --input or input=)".into()))?;
    let loss_kind = resolve(args.loss, cfg_file.get("loss")?, LossKind::Squared);
    let data = read_dataset(&input, loss_kind)?;
    Ok(Problem {
        data,
        loss_kind,
        lambda: resolve(args.lambda, cfg_file.get("lambda")?, 0.1),
        a: resolve(args.a, cfg_file.get("a")?, f64::NAN), // placed once M is known
        rho: resolve(args.rho, cfg_file.get("rho")?, 0.0),
        gamma_hat: resolve(args.gamma_hat, cfg_file.get("gamma_hat")?, 1e-3),
    })
}

fn certificate_line(cert: &S3oncCertificate, iterations: usize) -> String {
    format!(
        "certificate: residual={} exclusion_zone_ok={} iterations={iterations} tolerance={} pass={}",
        fmt_float(cert.first_order_residual),
        cert.exclusion_zone_ok,
        fmt_float(cert.tolerance),
        cert.passes()
    )
}

/// Builds the loss object and hands it to `body`. Keeps the
/// dataset-borrowing loss values alive for exactly the call.
fn with_loss<T>(
    problem: &Problem,
    body: impl FnOnce(&dyn LossModel) -> Result<T, Failure>,
) -> Result<T, Failure> {
    match problem.loss_kind {
        LossKind::Squared => {
            let loss = SquaredLoss::new(&problem.data)
                .map_err(|e| Failure::Invalid(e.to_string()))?;
            body(&loss)
        }
        LossKind::SmoothedHinge => {
            let sp = SmoothingParams::for_sample_size(problem.data.n());
            let loss = SmoothedSvmLoss::new(&problem.data, problem.rho, sp)
                .map_err(|e| Failure::Invalid(e.to_string()))?;
            body(&loss)
        }
    }
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

pub fn cmd_solve(
    manifest: &RunManifest,
    cfg_file: &Config,
    args: ProblemSettings,
) -> Result<(), Failure> {
    let alpha_flag = args.alpha_hat;
    let max_iter: Option<usize> = cfg_file.get("max_iter")?;
    let problem = assemble_problem(cfg_file, &args)?;
    with_loss(&problem, |loss| {
        let m = loss.lipschitz_bound();
        if m <= 0.0 || m.is_nan() {
            return Err(Failure::Invalid(
                "the dataset gives a degenerate loss (zero curvature bound)".into(),
            ));
        }
        let a = if problem.a.is_nan() { 0.5 / m } else { problem.a };
        let alpha_hat = resolve(alpha_flag, cfg_file.get("alpha_hat")?, 1.0 / m);
        let params =
            PenaltyParams::new(problem.lambda, a).map_err(|e| Failure::Invalid(e.to_string()))?;
        let mut solver = SolverConfig::new(problem.gamma_hat, alpha_hat, m)
            .map_err(|e| Failure::Invalid(e.to_string()))?;
        solver.max_iter = max_iter;

        let beta0 = vec![0.0; loss.dim()];
        let result =
            run(loss, &params, &solver, &beta0).map_err(|e| Failure::Invalid(e.to_string()))?;

        let resolved: Vec<(&str, String)> = vec![
            ("a", fmt_float(a)),
            ("alpha_hat", fmt_float(alpha_hat)),
            ("gamma_hat", fmt_float(problem.gamma_hat)),
            ("lambda", fmt_float(problem.lambda)),
            ("loss", problem.loss_kind.to_string()),
            ("m", fmt_float(m)),
            ("rho", fmt_float(problem.rho)),
        ];
        let path = manifest.output_path.join("solution.csv");
        let mut w = create_output(&path, &resolved, manifest.seed)?;
        write_row(&mut w, &path, &["index".into(), "value".into()])?;
        for (j, v) in result.beta.iter().enumerate() {
            write_row(&mut w, &path, &[j.to_string(), fmt_float(*v)])?;
        }
        drop(w);

        println!("wrote {}", path.display());
        println!("{}", certificate_line(&result.certificate, result.iterations));
        if result.certificate.passes() {
            Ok(())
        } else {
            Err(Failure::Certificate(format!(
                "terminated by {:?} without a passing certificate",
                result.terminated_by
            )))
        }
    })
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

pub fn cmd_check(
    _manifest: &RunManifest,
    cfg_file: &Config,
    args: ProblemSettings,
) -> Result<(), Failure> {
    let beta = match (&args.beta, cfg_file.get::<String>("beta")?) {
        (Some(b), _) => b.clone(),
        (None, Some(raw)) => parse_list(&raw)
            .map_err(|e| Failure::Invalid(format!("config key `beta`: {e}")))?,
        (None, None) => {
            return Err(Failure::Invalid(
                "no candidate vector given (use --beta or beta=)".into(),
            ))
        }
    };
    let problem = assemble_problem(cfg_file, &args)?;
    with_loss(&problem, |loss| {
        if beta.len() != loss.dim() {
            return Err(Failure::Invalid(format!(
                "candidate has {} coordinates but the dataset has {} features",
                beta.len(),
                loss.dim()
            )));
        }
        let m = loss.lipschitz_bound();
        let a = if problem.a.is_nan() {
            if m > 0.0 {
                0.5 / m
            } else {
                return Err(Failure::Invalid(
                    "the dataset gives a degenerate loss; pass a explicitly with --a".into(),
                ));
            }
        } else {
            problem.a
        };
        let params =
            PenaltyParams::new(problem.lambda, a).map_err(|e| Failure::Invalid(e.to_string()))?;
        let cert = check_s3onc(&beta, loss, &params, problem.gamma_hat);
        println!("{}", certificate_line(&cert, 0));
        if cert.passes() {
            Ok(())
        } else {
            Err(Failure::Certificate("candidate fails the stationarity check".into()))
        }
    })
}
