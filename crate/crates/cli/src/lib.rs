//! Experiment orchestration: configuration, dispatch and CSV traces.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use proxsdca::accel::{accelerated_solve, AccelOptions};
use proxsdca::data::{load_libsvm, preprocess, synthetic, SyntheticSpec, Task};
use proxsdca::fista::{fista_solve, FistaOptions};
use proxsdca::sdca::{solve, SolveOptions, StepOption, StoppingStrategy};
use proxsdca::{primal_value, ConvergenceTrace, Loss, Problem, Regularizer};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{key}: {message}")]
    Config { key: String, message: String },

    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("{context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: proxsdca::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

fn config_err(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config { key: key.to_string(), message: message.into() }
}

fn solver_err(context: impl Into<String>) -> impl FnOnce(proxsdca::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Solver { context, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    ProxSdca,
    Accel,
    Fista,
}

impl Algo {
    pub fn id(self) -> &'static str {
        match self {
            Algo::ProxSdca => "prox_sdca",
            Algo::Accel => "accel",
            Algo::Fista => "fista",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "prox_sdca" => Ok(Algo::ProxSdca),
            "accel" => Ok(Algo::Accel),
            "fista" => Ok(Algo::Fista),
            _ => Err(format!("unknown algorithm `{s}` (prox_sdca, accel, fista)")),
        }
    }
}

pub fn parse_option(s: &str) -> Result<StepOption, String> {
    match s {
        "closed_form" => Ok(StepOption::ClosedForm),
        "line_search" => Ok(StepOption::LineSearch),
        "analytic_s" => Ok(StepOption::AnalyticS),
        "r_bound" => Ok(StepOption::RBound),
        "fixed_s" => Ok(StepOption::FixedS),
        _ => Err(format!(
            "unknown step option `{s}` (closed_form, line_search, analytic_s, r_bound, fixed_s)"
        )),
    }
}

pub fn option_id(option: StepOption) -> &'static str {
    match option {
        StepOption::ClosedForm => "closed_form",
        StepOption::LineSearch => "line_search",
        StepOption::AnalyticS => "analytic_s",
        StepOption::RBound => "r_bound",
        StepOption::FixedS => "fixed_s",
    }
}

/// One experiment. Without `dataset_path` the synthetic generator supplies the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algo: Algo,
    pub loss: String,
    pub reg: String,
    pub lambda: f64,
    /// L1 weight relative to the objective, so the elastic regularizer gets `sigma / lambda`.
    pub sigma: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub normalize: bool,
    pub dataset_path: Option<PathBuf>,
    pub trace_path: Option<PathBuf>,
    pub option: StepOption,
    pub timing: bool,
    pub synthetic: SyntheticSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algo: Algo::Accel,
            loss: "smooth_hinge".into(),
            reg: "l2".into(),
            lambda: 1e-4,
            sigma: 0.0,
            gamma: 1.0,
            epsilon: 1e-3,
            max_epochs: 100,
            seed: 0,
            normalize: true,
            dataset_path: None,
            trace_path: None,
            option: StepOption::AnalyticS,
            timing: true,
            synthetic: SyntheticSpec::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| config_err(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(config_err(key, format!("expected a boolean, got `{value}`"))),
    }
}

impl ExperimentConfig {
    /// Sets one field from its textual form. Keys match the flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "algo" => self.algo = value.parse().map_err(|m| config_err(key, m))?,
            "loss" => self.loss = value.to_string(),
            "reg" => self.reg = value.to_string(),
            "lambda" => self.lambda = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "normalize" => self.normalize = parse_bool(key, value)?,
            "dataset_path" => self.dataset_path = Some(value.into()),
            "trace_path" => self.trace_path = Some(value.into()),
            "option" => self.option = parse_option(value).map_err(|m| config_err(key, m))?,
            "timing" => self.timing = parse_bool(key, value)?,
            "n" => self.synthetic.n = parse(key, value)?,
            "d" => self.synthetic.d = parse(key, value)?,
            "density" => self.synthetic.density = parse(key, value)?,
            "label_noise" => self.synthetic.label_noise = parse(key, value)?,
            "classes" => self.synthetic.classes = parse(key, value)?,
            "data_seed" => self.synthetic.seed = parse(key, value)?,
            _ => return Err(config_err(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(config_err("epsilon", "must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(config_err("max_epochs", "must be at least 1"));
        }
        if !(self.lambda > 0.0) {
            return Err(config_err("lambda", "must be positive"));
        }
        if !(self.sigma >= 0.0) {
            return Err(config_err("sigma", "must be non-negative"));
        }
        Ok(())
    }

    /// Applies `key=value` pairs in order; later pairs win.
    pub fn apply<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }
}

/// Reads `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| CliError::Manifest {
            line: ln + 1,
            message: format!("expected key=value, got `{body}`"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

#[derive(Debug, Parser, Default)]
#[command(name = "proxsdca", version, about = "Run Prox-SDCA, its accelerated variant or FISTA and write a convergence trace")]
#[command(rename_all = "snake_case")]
pub struct Cli {
    /// Manifest of key=value lines; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// File with one experiment per line, each a list of key=value overrides.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    /// Worker threads for --sweep (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,

    /// prox_sdca, accel or fista.
    #[arg(long)]
    pub algo: Option<String>,
    /// squared, logistic, hinge, smooth_hinge, max_of_hinge, smooth_max_of_hinge, soft_max_of_hinge.
    #[arg(long)]
    pub loss: Option<String>,
    /// l2 or elastic.
    #[arg(long)]
    pub reg: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize: Option<bool>,
    /// LibSVM file; the synthetic generator is used when absent.
    #[arg(long)]
    pub dataset_path: Option<PathBuf>,
    /// CSV output; `-` writes to stdout.
    #[arg(long)]
    pub trace_path: Option<PathBuf>,
    /// Step rule for Prox-SDCA and the accelerated inner solver.
    #[arg(long)]
    pub option: Option<String>,
    /// Record zero wall time so traces are reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,

    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub label_noise: Option<f64>,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Seed of the synthetic generator.
    #[arg(long)]
    pub data_seed: Option<u64>,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        macro_rules! push {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    out.push((stringify!($field), v.to_string()));
                })*
            };
        }
        push!(algo, loss, reg, lambda, sigma, gamma, epsilon, max_epochs, seed, normalize, option);
        push!(n, d, density, label_noise, classes, data_seed);
        if let Some(p) = &self.dataset_path {
            out.push(("dataset_path", p.display().to_string()));
        }
        if let Some(p) = &self.trace_path {
            out.push(("trace_path", p.display().to_string()));
        }
        if self.no_timing {
            out.push(("timing", "false".into()));
        }
        out
    }

    /// Defaults, then the manifest, then flags.
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let entries = parse_manifest(&read_text(path)?)?;
            config.apply(entries.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        }
        config.apply(self.overrides().iter().map(|(k, v)| (*k, v.as_str())))?;
        config.validate()?;
        Ok(config)
    }
}

fn task_for(loss: &Loss) -> Task {
    match loss {
        Loss::Squared => Task::Regression,
        Loss::Logistic => Task::Logistic,
        l if l.is_vector() => Task::Multiclass,
        _ => Task::Svm,
    }
}

/// The problem described by `config`, before any smoothing.
pub fn build_problem(config: &ExperimentConfig) -> Result<Problem> {
    let loss = Loss::from_id(&config.loss, config.gamma).map_err(solver_err("loss"))?;
    let data = match &config.dataset_path {
        Some(path) => load_libsvm(path).map_err(solver_err(path.display().to_string()))?,
        None => {
            let mut spec = config.synthetic.clone();
            if loss.is_vector() && spec.classes < 3 {
                spec.classes = 3;
            }
            synthetic(&spec).map_err(solver_err("synthetic data"))?
        }
    };
    let (design, targets) =
        preprocess(&data, task_for(&loss), config.normalize).map_err(solver_err("preprocessing"))?;
    let reg = match config.reg.as_str() {
        "l2" if config.sigma == 0.0 => Regularizer::L2,
        "l2" => return Err(config_err("sigma", "needs reg=elastic")),
        "elastic" => Regularizer::Elastic { sigma: config.sigma / config.lambda },
        "l2_shift" | "elastic_shift" => {
            return Err(config_err("reg", "shifted regularizers are only available through the library"))
        }
        other => return Err(config_err("reg", format!("unknown regularizer `{other}`"))),
    };
    Problem::new(design, loss, targets, reg, config.lambda).map_err(solver_err("problem"))
}

/// Result of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub algo: Algo,
    pub trace: ConvergenceTrace,
    pub epochs: f64,
    pub gap: f64,
    /// Objective of the configured (unsmoothed) problem at the returned `w`.
    pub primal: f64,
    pub converged: bool,
    pub w: Vec<f64>,
}

impl Report {
    pub fn summary(&self) -> String {
        format!("algo={} epochs={} gap={:e} primal={:.16e}", self.algo, self.epochs, self.gap, self.primal)
    }

    pub fn exit_code(&self) -> u8 {
        if self.converged {
            0
        } else {
            2
        }
    }
}

/// Builds the problem, runs the selected solver and writes the trace if asked.
///
/// Hinge-type losses are smoothed with `gamma = epsilon` and solved to
/// `epsilon / 2`, which bounds the suboptimality on the original loss by `epsilon`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let original = build_problem(config)?;
    let (problem, epsilon) = if original.loss().is_smooth() {
        (original.clone(), config.epsilon)
    } else {
        let smooth = original.loss().smooth(config.epsilon).map_err(solver_err("smoothing"))?;
        (original.with_loss(smooth).map_err(solver_err("smoothing"))?, config.epsilon / 2.0)
    };
    let max_epochs = config.max_epochs as f64;
    let outcome = match config.algo {
        Algo::ProxSdca => {
            let opts = SolveOptions {
                option: config.option,
                stopping: StoppingStrategy::FinalIterate,
                epsilon,
                max_epochs,
                max_iterations: None,
                seed: config.seed,
                timing: config.timing,
            };
            solve(&problem, None, &opts).map_err(solver_err("prox_sdca"))?
        }
        Algo::Accel => {
            let opts = AccelOptions {
                epsilon,
                seed: config.seed,
                inner_option: config.option,
                max_epochs,
                timing: config.timing,
                ..AccelOptions::default()
            };
            accelerated_solve(&problem, &opts).map_err(solver_err("accel"))?.outcome
        }
        Algo::Fista => {
            let opts = FistaOptions {
                max_epochs: config.max_epochs,
                epsilon: Some(epsilon),
                timing: config.timing,
            };
            fista_solve(&problem, &opts).map_err(solver_err("fista"))?
        }
    };
    let primal = primal_value(&original, &outcome.w).map_err(solver_err("objective"))?;
    let report = Report {
        algo: config.algo,
        trace: outcome.trace,
        epochs: outcome.epochs,
        gap: outcome.gap,
        primal,
        converged: outcome.converged,
        w: outcome.w,
    };
    match config.trace_path.as_deref() {
        None => {}
        Some(p) if p == Path::new("-") => {
            let stdout = std::io::stdout();
            write_trace(&report.trace, stdout.lock())
                .map_err(|source| CliError::Io { path: p.into(), source })?;
        }
        Some(p) => {
            let io = |source| CliError::Io { path: p.into(), source };
            let file = File::create(p).map_err(io)?;
            write_trace(&report.trace, BufWriter::new(file)).map_err(io)?;
        }
    }
    Ok(report)
}

pub const TRACE_HEADER: &str = "epoch,primal,dual,gap,wall_ms";

/// Writes the trace as CSV. Reals carry 17 significant digits.
pub fn write_trace(trace: &ConvergenceTrace, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace.rows() {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.epoch, r.primal, r.dual, r.gap, r.wall_ms
        )?;
    }
    out.flush()
}

/// Parses a sweep file: one experiment per non-empty line, whitespace-separated `key=value`.
pub fn parse_sweep(text: &str, base: &ExperimentConfig) -> Result<Vec<ExperimentConfig>> {
    let mut configs = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut config = base.clone();
        for tok in body.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| CliError::Manifest {
                line: ln + 1,
                message: format!("expected key=value, got `{tok}`"),
            })?;
            config.set(k, v)?;
        }
        config.validate()?;
        configs.push(config);
    }
    Ok(configs)
}

/// Runs independent experiments on the rayon pool. Results keep input order.
pub fn run_sweep(configs: &[ExperimentConfig]) -> Vec<Result<Report>> {
    configs.par_iter().map(run_experiment).collect()
}

/// 1 if any run failed, else 2 if any missed its target, else 0.
pub fn sweep_exit_code(results: &[Result<Report>]) -> u8 {
    results.iter().fold(0, |code, r| match r {
        Err(_) => 1,
        Ok(rep) if code == 0 => rep.exit_code(),
        Ok(_) => code,
    })
}

/// Entry point shared by the binary and the tests. Returns the exit code.
pub fn run_cli(cli: &Cli, mut stdout: impl Write, mut stderr: impl Write) -> u8 {
    let result = (|| -> Result<u8> {
        let base = cli.to_config()?;
        match &cli.sweep {
            None => {
                let report = run_experiment(&base)?;
                let _ = writeln!(stdout, "{}", report.summary());
                Ok(report.exit_code())
            }
            Some(path) => {
                let configs = parse_sweep(&read_text(path)?, &base)?;
                let results = match cli.jobs {
                    Some(j) => rayon::ThreadPoolBuilder::new()
                        .num_threads(j.max(1))
                        .build()
                        .map_err(|e| config_err("jobs", e.to_string()))?
                        .install(|| run_sweep(&configs)),
                    None => run_sweep(&configs),
                };
                for r in &results {
                    match r {
                        Ok(rep) => {
                            let _ = writeln!(stdout, "{}", rep.summary());
                        }
                        Err(e) => {
                            let _ = writeln!(stderr, "error: {e}");
                        }
                    }
                }
                Ok(sweep_exit_code(&results))
            }
        }
    })();
    result.unwrap_or_else(|e| {
        let _ = writeln!(stderr, "error: {e}");
        1
    })
}
