//! `divprox` command-line tool.

mod output;
mod problem_file;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use divprox::epigraph::{project_epi_conjugate, ConjugatePoint};
use divprox::problems::{
    bench, default_eta_grid, default_lambda_grid, estimate, grid_search, paper_instance, random_instance, BenchConfig,
    build_proposed, build_relaxed_divergence, build_relaxed_euclidean, EstimationConfig, Method, SelectivityInstance,
};
use divprox::scalar::{prox_divergence_traced, DivergenceKind, DivergenceSpec, ScalarProxQuery};
use divprox::simple_prox::BallNorm;
use divprox::solvers::{solve, SolveReport, SolverKind};
use divprox::Error;
use serde::Serialize;
use serde_json::json;

use output::{fmt_f64, to_json};
use problem_file::ProblemFile;

#[derive(Parser)]
#[command(name = "divprox", version, about = "Proximity operators of phi-divergences and proximal solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Joint prox of gamma * Phi at one point.
    Prox(ProxArgs),
    /// Projection onto the epigraph of the conjugate generator.
    ProjectEpi(EpiArgs),
    /// Solve a problem file.
    Solve(SolveArgs),
    /// Selectivity estimation on the benchmark or a random instance.
    Selectivity(SelectivityArgs),
    /// Timing study over random instances.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DivergenceArgs {
    /// kl, jeffreys, hellinger, chi-square, renyi or i-alpha.
    #[arg(long)]
    divergence: DivergenceKind,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
}

impl DivergenceArgs {
    fn spec(&self) -> Result<DivergenceSpec, CliError> {
        let alpha = match (self.divergence, self.alpha) {
            (DivergenceKind::Renyi, None) => Some(2.0),
            (DivergenceKind::IAlpha, None) => Some(0.5),
            (_, a) => a,
        };
        Ok(DivergenceSpec::new(self.divergence, alpha, self.kappa)?)
    }
}

#[derive(Args)]
struct ProxArgs {
    #[command(flatten)]
    divergence: DivergenceArgs,
    #[arg(long)]
    gamma: f64,
    #[arg(long, allow_hyphen_values = true)]
    u: f64,
    #[arg(long, allow_hyphen_values = true)]
    xi: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EpiArgs {
    #[command(flatten)]
    divergence: DivergenceArgs,
    /// `U,XI`.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Overrides the solver named in the file; M+LFBF when neither is set.
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// CSV with columns iter, objective, residual, seconds.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SelectivityArgs {
    /// `paper`, `random:N:SEED` or a JSON instance file.
    #[arg(long, default_value = "paper")]
    instance: String,
    #[arg(long)]
    method: Method,
    #[arg(long, default_value = "kl")]
    divergence: DivergenceKind,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Ball norm: 1, 2 or inf.
    #[arg(long, default_value = "2")]
    k: BallNorm,
    /// Search the default grids instead of using --lambda/--eta.
    #[arg(long, conflicts_with_all = ["lambda", "eta"])]
    grid: bool,
    #[arg(long, default_value = "mlfbf")]
    solver: SolverKind,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Result JSON.
    #[arg(long, default_value = "selectivity.json")]
    out: PathBuf,
    /// Also write the assembled problem as a problem file.
    #[arg(long)]
    export_problem: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "7,70,700,7000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 1, kind: "usage", message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match e {
            Error::SolverFailure { .. } => (2, "solver_failure"),
            Error::Factorization(_) => (2, "factorization"),
            Error::Schema(_) => (1, "schema"),
            Error::DimensionMismatch { .. } => (1, "dimension_mismatch"),
            Error::InvalidParameter(_) => (1, "invalid_parameter"),
        };
        CliError { code, kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: 1, kind: "io", message: e.to_string() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError { code: 1, kind: "schema", message: e.to_string() }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError { code: 1, kind: "io", message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return report(CliError::usage(e.to_string().trim_end()));
        }
    };
    if let Err(e) = configure_threads() {
        return report(e);
    }
    let result = match cli.command {
        Command::Prox(a) => run_prox(a),
        Command::ProjectEpi(a) => run_epi(a),
        Command::Solve(a) => run_solve(a),
        Command::Selectivity(a) => run_selectivity(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    eprintln!("{}", to_json(&json!({"error": {"kind": e.kind, "message": e.message}})));
    ExitCode::from(e.code)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("DIVPROX_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("DIVPROX_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::usage(e.to_string()))
}

fn run_prox(a: ProxArgs) -> Result<(), CliError> {
    let spec = a.divergence.spec()?;
    let q = ScalarProxQuery::new(a.gamma, a.u, a.xi)?;
    let (p, trace) = prox_divergence_traced(&spec, &q)?;
    if a.json {
        println!("{}", to_json(&json!({"divergence": spec, "prox": p, "trace": trace})));
    } else {
        println!("u = {}", fmt_f64(p.u));
        println!("xi = {}", fmt_f64(p.xi));
        match trace {
            Some(t) => println!(
                "zeta_hat = {}  bracket = ({}, {})  iterations = {}  |psi'| = {}{}",
                fmt_f64(t.zeta_hat),
                fmt_f64(t.chi_minus),
                fmt_f64(t.chi_plus),
                t.iterations,
                fmt_f64(t.residual),
                if t.clamped { "  (clamped)" } else { "" }
            ),
            None => println!("boundary branch"),
        }
    }
    Ok(())
}

fn run_epi(a: EpiArgs) -> Result<(), CliError> {
    let spec = a.divergence.spec()?;
    let parts: Vec<&str> = a.point.split(',').collect();
    let [u, xi] = parts[..] else {
        return Err(CliError::usage("--point expects U,XI"));
    };
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| CliError::usage(format!("bad number '{s}' in --point")));
    let point = ConjugatePoint { u_star: parse(u)?, xi_star: parse(xi)? };
    let p = project_epi_conjugate(&spec, point)?;
    if a.json {
        println!("{}", to_json(&json!({"divergence": spec, "point": point, "projection": p})));
    } else {
        println!("u* = {}", fmt_f64(p.u_star));
        println!("xi* = {}", fmt_f64(p.xi_star));
    }
    Ok(())
}

fn run_solve(a: SolveArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.problem)?;
    let file: ProblemFile = serde_json::from_str(&text)?;
    let problem = file.to_spec()?;
    let section = file.solver.unwrap_or_default();
    let kind = a.solver.or(section.name).unwrap_or(SolverKind::Mlfbf);
    let mut config = section.config;
    if let Some(t) = a.tol {
        config.stop_tol = t;
    }
    if let Some(m) = a.max_iters {
        config.max_iterations = m;
    }
    if a.trace.is_some() {
        config.record_trace = true;
    }
    let report = solve(&problem, kind, &config)?;
    if let Some(path) = &a.trace {
        write_trace(path, &report)?;
    }
    if a.json {
        println!("{}", to_json(&json!({"solver": kind, "report": report})));
    } else {
        println!("solver = {kind}");
        println!("iterations = {}", report.iterations);
        println!("stop_reason = {}", serde_json::to_value(report.stop_reason)?.as_str().unwrap_or_default());
        println!("objective = {}", fmt_f64(report.final_objective));
        println!("residual = {}", fmt_f64(report.final_residual));
        println!("wall_time = {}", fmt_f64(report.wall_time));
        let xs: Vec<String> = report.x_final.iter().map(|v| fmt_f64(*v)).collect();
        println!("x = [{}]", xs.join(", "));
    }
    Ok(())
}

fn write_trace(path: &PathBuf, report: &SolveReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "objective", "residual", "seconds"])?;
    for i in 0..report.residual_trace.len() {
        w.write_record([
            (i + 1).to_string(),
            fmt_f64(report.objective_trace[i]),
            fmt_f64(report.residual_trace[i]),
            fmt_f64(report.time_trace[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn load_instance(desc: &str) -> Result<SelectivityInstance, CliError> {
    if desc == "paper" {
        return Ok(paper_instance());
    }
    if let Some(rest) = desc.strip_prefix("random:") {
        let mut it = rest.split(':');
        let (Some(n), Some(seed), None) = (it.next(), it.next(), it.next()) else {
            return Err(CliError::usage("expected random:N:SEED"));
        };
        let n = n.parse().map_err(|_| CliError::usage(format!("bad N '{n}'")))?;
        let seed = seed.parse().map_err(|_| CliError::usage(format!("bad seed '{seed}'")))?;
        return Ok(random_instance(n, seed)?);
    }
    Ok(serde_json::from_str(&fs::read_to_string(desc)?)?)
}

#[derive(Serialize)]
struct SelectivityOutput<'a> {
    instance: &'a str,
    result: divprox::problems::EstimationResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<divprox::problems::GridResult>,
}

fn run_selectivity(a: SelectivityArgs) -> Result<(), CliError> {
    let mut inst = load_instance(&a.instance)?;
    inst.k = a.k;
    let spec = DivergenceArgs { divergence: a.divergence, alpha: a.alpha, kappa: None }.spec()?;
    let mut cfg = EstimationConfig { solver: a.solver, ..Default::default() };
    if let Some(t) = a.tol {
        cfg.config.stop_tol = t;
    }
    if let Some(m) = a.max_iters {
        cfg.config.max_iterations = m;
    }
    let grid = if a.grid {
        let g = grid_search(&inst, a.method, Some(&spec), &default_lambda_grid(), &default_eta_grid(), &cfg)?;
        inst.lambda = g.best.lambda.or(inst.lambda);
        inst.eta = g.best.eta.or(inst.eta);
        Some(g)
    } else {
        inst.lambda = a.lambda.or(inst.lambda);
        inst.eta = a.eta.or(inst.eta);
        None
    };
    if a.method.uses_lambda() && inst.lambda.is_none() {
        return Err(CliError::usage(format!("method {} needs --lambda or --grid", a.method)));
    }
    if a.method.uses_eta() && inst.eta.is_none() {
        return Err(CliError::usage(format!("method {} needs --eta or --grid", a.method)));
    }
    if let Some(path) = &a.export_problem {
        let problem = match a.method {
            Method::Proposed => build_proposed(&inst, &spec)?,
            Method::Relaxed => build_relaxed_euclidean(&inst)?,
            Method::RelaxedDiv => build_relaxed_divergence(&inst, &spec)?,
            Method::TwoStep => return Err(CliError::usage("two-step solves two problems; nothing to export")),
        };
        let section = problem_file::SolverSection { name: Some(cfg.solver), config: cfg.config.clone() };
        fs::write(path, to_json(&ProblemFile::from_spec(&problem, Some(section))) + "\n")?;
    }
    let result = estimate(&inst, a.method, Some(&spec), &cfg)?;
    println!("method = {}", a.method);
    if a.method.uses_divergence() {
        println!("divergence = {spec}");
    }
    if let Some(l) = result.lambda {
        println!("lambda = {}", fmt_f64(l));
    }
    if let Some(e) = result.eta {
        println!("eta = {}", fmt_f64(e));
    }
    println!("q_inf = {}", fmt_f64(result.q_inf));
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    fs::write(&a.out, to_json(&SelectivityOutput { instance: &a.instance, result, grid }) + "\n")?;
    Ok(())
}

fn run_bench(a: BenchArgs) -> Result<(), CliError> {
    let defaults = BenchConfig::default();
    let cfg = BenchConfig {
        lambda: a.lambda,
        eta: a.eta,
        repeats: a.repeats,
        max_iterations: a.max_iters.unwrap_or(defaults.max_iterations),
        ..defaults
    };
    let rows = bench(&a.sizes, a.seed, &cfg)?;
    let mut w = match &a.out {
        Some(p) => csv::Writer::from_writer(Box::new(fs::File::create(p)?) as Box<dyn std::io::Write>),
        None => csv::Writer::from_writer(Box::new(std::io::stdout()) as Box<dyn std::io::Write>),
    };
    w.write_record(["n", "p", "repeats", "median_seconds", "min_seconds", "max_seconds", "iterations", "stop_reason", "q_inf"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.p.to_string(),
            r.repeats.to_string(),
            fmt_f64(r.median_seconds),
            fmt_f64(r.min_seconds),
            fmt_f64(r.max_seconds),
            r.iterations.to_string(),
            serde_json::to_value(r.stop_reason)?.as_str().unwrap_or_default().to_string(),
            fmt_f64(r.q_inf),
        ])?;
    }
    w.flush()?;
    Ok(())
}
