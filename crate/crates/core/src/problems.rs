//! Selectivity estimation: the joint divergence formulation, its baselines,
//! quotient metrics, instances and the timing harness.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::linop::LinearOp;
use crate::scalar::{DivergenceKind, DivergenceSpec};
use crate::simple_prox::{BallNorm, SimpleFn};
use crate::solvers::{solve, DivergenceTerm, ProblemSpec, SolveReport, SolverConfig, SolverKind, StopReason, Term};

/// Binary incidence matrix `A`, rough estimates `z` and the optional
/// hyperparameters of the joint formulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct SelectivityInstance {
    a: DMatrix<f64>,
    z: Vec<f64>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub k: BallNorm,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    z: Vec<f64>,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    eta: Option<f64>,
    #[serde(default = "default_norm")]
    k: BallNorm,
}

fn default_norm() -> BallNorm {
    BallNorm::L2
}

impl TryFrom<RawInstance> for SelectivityInstance {
    type Error = Error;

    fn try_from(r: RawInstance) -> Result<Self> {
        let p = r.a.len();
        let n = r.a.first().map_or(0, Vec::len);
        for row in &r.a {
            check_len("row of A", n, row.len())?;
        }
        let a = DMatrix::from_fn(p, n, |i, j| r.a[i][j]);
        let mut inst = SelectivityInstance::new(a, r.z)?;
        inst.lambda = r.lambda;
        inst.eta = r.eta;
        inst.k = r.k;
        inst.check_hyper()?;
        Ok(inst)
    }
}

impl From<SelectivityInstance> for RawInstance {
    fn from(s: SelectivityInstance) -> Self {
        let a = (0..s.a.nrows()).map(|i| s.a.row(i).iter().copied().collect()).collect();
        RawInstance { a, z: s.z, lambda: s.lambda, eta: s.eta, k: s.k }
    }
}

impl SelectivityInstance {
    /// Checks that `A` is binary and `z` lies in `(0, 1]`.
    pub fn new(a: DMatrix<f64>, z: Vec<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(invalid("A must be nonempty"));
        }
        check_len("z", a.nrows(), z.len())?;
        if a.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(invalid("A must be binary"));
        }
        if z.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(invalid("z must lie in (0, 1]"));
        }
        Ok(Self { a, z, lambda: None, eta: None, k: BallNorm::L2 })
    }

    pub fn with_hyper(mut self, lambda: f64, eta: f64, k: BallNorm) -> Result<Self> {
        self.lambda = Some(lambda);
        self.eta = Some(eta);
        self.k = k;
        self.check_hyper()?;
        Ok(self)
    }

    fn check_hyper(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("eta", self.eta)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Number of cells `N`.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Number of events `P`.
    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    fn lambda(&self) -> Result<f64> {
        self.lambda.ok_or_else(|| invalid("lambda is not set"))
    }

    fn eta(&self) -> Result<f64> {
        self.eta.ok_or_else(|| invalid("eta is not set"))
    }

    pub fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        (&self.a * nalgebra::DVector::from_column_slice(x)).data.into()
    }
}

/// The 6 x 7 benchmark instance; `lambda` and `eta` are left unset.
pub fn paper_instance() -> SelectivityInstance {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(6, 7, &[
        1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0,
        0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0,
        0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0,
        0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0,
        0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0,
    ]);
    let z = vec![0.2114, 0.6331, 0.6312, 0.5182, 0.9337, 0.0035];
    SelectivityInstance::new(a, z).expect("benchmark instance is valid")
}

/// Random instance with `P = 6N/7` for `N` a positive multiple of 7.
///
/// The bit stream of `ChaCha8Rng::seed_from_u64(seed)` fills `A` row by row
/// with fair coin flips; rows and then columns that came out all zero are
/// redrawn in index order until none remain. `z` is then drawn
/// componentwise from `U(0, 1)`, redrawing exact zeros.
pub fn random_instance(n: usize, seed: u64) -> Result<SelectivityInstance> {
    if n == 0 || n % 7 != 0 {
        return Err(invalid(format!("N must be a positive multiple of 7, got {n}")));
    }
    let p = 6 * n / 7;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(p, n);
    for i in 0..p {
        for j in 0..n {
            a[(i, j)] = f64::from(u8::from(rng.gen_bool(0.5)));
        }
    }
    loop {
        let mut redrawn = false;
        for i in 0..p {
            while a.row(i).iter().all(|v| *v == 0.0) {
                redrawn = true;
                for j in 0..n {
                    a[(i, j)] = f64::from(u8::from(rng.gen_bool(0.5)));
                }
            }
        }
        for j in 0..n {
            while a.column(j).iter().all(|v| *v == 0.0) {
                redrawn = true;
                for i in 0..p {
                    a[(i, j)] = f64::from(u8::from(rng.gen_bool(0.5)));
                }
            }
        }
        if !redrawn {
            break;
        }
    }
    let z = (0..p)
        .map(|_| loop {
            let v: f64 = rng.gen();
            if v > 0.0 {
                break v;
            }
        })
        .collect();
    SelectivityInstance::new(a, z)
}

/// `max(t, 1/t)` for `t > 0`, `+inf` otherwise.
fn quotient(t: f64) -> f64 {
    if t >= 1.0 {
        t
    } else if t > 0.0 {
        1.0 / t
    } else {
        f64::INFINITY
    }
}

/// `max_i max(y_i / z_i, z_i / y_i)`.
pub fn q_infinity(ax: &[f64], z: &[f64]) -> f64 {
    ax.iter().zip(z).map(|(y, z)| quotient(y / z)).fold(1.0, f64::max)
}

/// `sum_i max(y_i / z_i, z_i / y_i)`.
pub fn q_one(ax: &[f64], z: &[f64]) -> f64 {
    ax.iter().zip(z).map(|(y, z)| quotient(y / z)).sum()
}

/// Compared estimation methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Joint estimation of `x` and feasible probabilities `y`.
    Proposed,
    /// `|Ax - z|^2` penalty.
    Relaxed,
    /// `D(Ax, z)` penalty.
    RelaxedDiv,
    /// Quotient fit followed by the exact entropy problem.
    TwoStep,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Proposed, Method::Relaxed, Method::RelaxedDiv, Method::TwoStep];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Relaxed => "relaxed",
            Method::RelaxedDiv => "relaxed-div",
            Method::TwoStep => "two-step",
        }
    }

    pub fn uses_divergence(self) -> bool {
        matches!(self, Method::Proposed | Method::RelaxedDiv)
    }

    pub fn uses_lambda(self) -> bool {
        self != Method::TwoStep
    }

    pub fn uses_eta(self) -> bool {
        self == Method::Proposed
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| invalid(format!("unknown method '{s}'")))
    }
}

fn embed(op: LinearOp, col_offset: usize, total: usize) -> LinearOp {
    LinearOp::embed(op, col_offset, total).expect("block fits")
}

/// Joint problem in `w = (x, y)`:
/// `D(Ax, y) + lambda sum x ln x` with `x` on the simplex and
/// `|y - z|_k <= eta`.
pub fn build_proposed(inst: &SelectivityInstance, divergence: &DivergenceSpec) -> Result<ProblemSpec> {
    let (n, p) = (inst.n(), inst.p());
    let total = n + p;
    let x_block = || embed(LinearOp::Identity(n), 0, total);
    ProblemSpec::new(
        total,
        Some(DivergenceTerm {
            spec: *divergence,
            a: embed(LinearOp::Dense(inst.a.clone()), 0, total),
            b: embed(LinearOp::Identity(p), n, total),
            u: vec![0.0; p],
            v: vec![0.0; p],
        }),
        vec![
            Term { t: x_block(), f: SimpleFn::neg_entropy(n, inst.lambda()?)? },
            Term { t: x_block(), f: SimpleFn::simplex(n, 1.0)? },
            Term { t: embed(LinearOp::Identity(p), n, total), f: SimpleFn::ball(inst.z.clone(), inst.eta()?, inst.k)? },
        ],
    )
}

fn entropy_and_simplex(n: usize, lambda: f64) -> Result<Vec<Term>> {
    Ok(vec![
        Term { t: LinearOp::Identity(n), f: SimpleFn::neg_entropy(n, lambda)? },
        Term { t: LinearOp::Identity(n), f: SimpleFn::simplex(n, 1.0)? },
    ])
}

/// `|Ax - z|^2 + lambda sum x ln x` on the simplex.
pub fn build_relaxed_euclidean(inst: &SelectivityInstance) -> Result<ProblemSpec> {
    let mut terms = vec![Term { t: LinearOp::Dense(inst.a.clone()), f: SimpleFn::sq_distance(inst.z.clone())? }];
    terms.extend(entropy_and_simplex(inst.n(), inst.lambda()?)?);
    ProblemSpec::new(inst.n(), None, terms)
}

/// `D(Ax, z) + lambda sum x ln x` on the simplex.
pub fn build_relaxed_divergence(inst: &SelectivityInstance, divergence: &DivergenceSpec) -> Result<ProblemSpec> {
    let (n, p) = (inst.n(), inst.p());
    ProblemSpec::new(
        n,
        Some(DivergenceTerm {
            spec: *divergence,
            a: LinearOp::Dense(inst.a.clone()),
            b: LinearOp::Zero { rows: p, cols: n },
            u: vec![0.0; p],
            v: inst.z.clone(),
        }),
        entropy_and_simplex(n, inst.lambda()?)?,
    )
}

/// `Q1(Ax, z)` on the simplex.
pub fn build_quotient_fit(inst: &SelectivityInstance) -> Result<ProblemSpec> {
    ProblemSpec::new(
        inst.n(),
        None,
        vec![
            Term { t: LinearOp::Dense(inst.a.clone()), f: SimpleFn::quotient_q1(inst.z.clone())? },
            Term { t: LinearOp::Identity(inst.n()), f: SimpleFn::simplex(inst.n(), 1.0)? },
        ],
    )
}

/// `sum x ln x` on the simplex subject to `<a_i, x> = z_hat_i` for every
/// row `a_i` of `A`.
pub fn build_entropy_baseline(inst: &SelectivityInstance, z_hat: &[f64]) -> Result<ProblemSpec> {
    check_len("z_hat", inst.p(), z_hat.len())?;
    let n = inst.n();
    let mut terms = entropy_and_simplex(n, 1.0)?;
    for (i, zi) in z_hat.iter().enumerate() {
        let normal = inst.a.row(i).iter().copied().collect();
        terms.push(Term { t: LinearOp::Identity(n), f: SimpleFn::hyperplane(normal, *zi)? });
    }
    ProblemSpec::new(n, None, terms)
}

/// Solver settings of an estimation run. The default stops at a relative
/// change of `1e-10`, tight enough for the outputs to satisfy their
/// constraints to about `1e-8`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    pub solver: SolverKind,
    pub config: SolverConfig,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self { solver: SolverKind::Mlfbf, config: SolverConfig { max_iterations: 200_000, stop_tol: 1e-10, ..Default::default() } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub method: Method,
    pub divergence: Option<DivergenceSpec>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub x: Vec<f64>,
    /// Feasible probabilities, for the joint formulation only.
    pub y: Option<Vec<f64>>,
    pub q_inf: f64,
    /// Report of the last solve.
    pub report: SolveReport,
    pub warnings: Vec<String>,
}

fn warn_report(report: &SolveReport, what: &str, warnings: &mut Vec<String>) {
    if report.stop_reason == StopReason::MaxIterations {
        warnings.push(format!("{what}: iteration cap {} reached", report.iterations));
    }
}

/// Solves one method on an instance. `divergence` is required by the
/// divergence-based methods and ignored otherwise.
pub fn estimate(
    inst: &SelectivityInstance,
    method: Method,
    divergence: Option<&DivergenceSpec>,
    cfg: &EstimationConfig,
) -> Result<EstimationResult> {
    let mut warnings = Vec::new();
    let div = if method.uses_divergence() {
        let d = *divergence.ok_or_else(|| invalid(format!("method {method} needs a divergence")))?;
        if d.kind() == DivergenceKind::Renyi {
            warnings.push("the Renyi divergence favors sparse solutions and is excluded from the benchmark".into());
        }
        Some(d)
    } else {
        None
    };
    let n = inst.n();
    let (x, y, report) = match method {
        Method::Proposed => {
            let r = solve(&build_proposed(inst, div.as_ref().unwrap())?, cfg.solver, &cfg.config)?;
            warn_report(&r, "proposed", &mut warnings);
            (r.x_final[..n].to_vec(), Some(r.x_final[n..].to_vec()), r)
        }
        Method::Relaxed => {
            let r = solve(&build_relaxed_euclidean(inst)?, cfg.solver, &cfg.config)?;
            warn_report(&r, "relaxed", &mut warnings);
            (r.x_final.clone(), None, r)
        }
        Method::RelaxedDiv => {
            let r = solve(&build_relaxed_divergence(inst, div.as_ref().unwrap())?, cfg.solver, &cfg.config)?;
            warn_report(&r, "relaxed-div", &mut warnings);
            (r.x_final.clone(), None, r)
        }
        Method::TwoStep => return two_step_estimate(inst, cfg),
    };
    let q_inf = q_infinity(&inst.apply_a(&x), &inst.z);
    Ok(EstimationResult {
        method,
        divergence: div,
        lambda: inst.lambda,
        eta: if method.uses_eta() { inst.eta } else { None },
        x,
        y,
        q_inf,
        report,
        warnings,
    })
}

/// Quotient fit `x_hat`, then the exact entropy problem with
/// `z_hat = A x_hat`.
pub fn two_step_estimate(inst: &SelectivityInstance, cfg: &EstimationConfig) -> Result<EstimationResult> {
    let mut warnings = Vec::new();
    let first = solve(&build_quotient_fit(inst)?, cfg.solver, &cfg.config)?;
    warn_report(&first, "two-step (quotient fit)", &mut warnings);
    let z_hat = inst.apply_a(&first.x_final);
    let second = solve(&build_entropy_baseline(inst, &z_hat)?, cfg.solver, &cfg.config)?;
    warn_report(&second, "two-step (entropy)", &mut warnings);
    let x = second.x_final.clone();
    let q_inf = q_infinity(&inst.apply_a(&x), &inst.z);
    Ok(EstimationResult {
        method: Method::TwoStep,
        divergence: None,
        lambda: None,
        eta: None,
        x,
        y: None,
        q_inf,
        report: second,
        warnings,
    })
}

/// `10^(-3 + k/2)`, `k = 0..8`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-3.0 + 0.5 * k as f64)).collect()
}

/// `10^(-2 + 2k/7)`, `k = 0..7`.
pub fn default_eta_grid() -> Vec<f64> {
    (0..8).map(|k| 10f64.powf(-2.0 + 2.0 * k as f64 / 7.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    /// `+inf` when the solve failed.
    pub q_inf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub best: GridCell,
    /// Every cell in grid order, `lambda` major.
    pub cells: Vec<GridCell>,
}

/// Exhaustive search for the smallest `Q_inf`. Grids that the method does
/// not use collapse to one cell; ties go to the earliest cell.
pub fn grid_search(
    inst: &SelectivityInstance,
    method: Method,
    divergence: Option<&DivergenceSpec>,
    lambda_grid: &[f64],
    eta_grid: &[f64],
    cfg: &EstimationConfig,
) -> Result<GridResult> {
    let lambdas: Vec<Option<f64>> = if method.uses_lambda() { lambda_grid.iter().copied().map(Some).collect() } else { vec![None] };
    let etas: Vec<Option<f64>> = if method.uses_eta() { eta_grid.iter().copied().map(Some).collect() } else { vec![None] };
    if lambdas.is_empty() || etas.is_empty() {
        return Err(invalid("grids must be nonempty"));
    }
    let pairs: Vec<(Option<f64>, Option<f64>)> = lambdas.iter().flat_map(|l| etas.iter().map(move |e| (*l, *e))).collect();
    let cells: Vec<GridCell> = pairs
        .into_par_iter()
        .map(|(lambda, eta)| {
            let mut local = inst.clone();
            local.lambda = lambda.or(local.lambda);
            local.eta = eta.or(local.eta);
            let q_inf = estimate(&local, method, divergence, cfg).map_or(f64::INFINITY, |r| r.q_inf);
            GridCell { lambda, eta, q_inf: if q_inf.is_nan() { f64::INFINITY } else { q_inf } }
        })
        .collect();
    let mut best = cells[0].clone();
    for c in &cells[1..] {
        if c.q_inf < best.q_inf {
            best = c.clone();
        }
    }
    Ok(GridResult { best, cells })
}

/// Settings of the timing study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub divergence: DivergenceSpec,
    pub lambda: f64,
    pub eta: f64,
    pub k: BallNorm,
    pub repeats: usize,
    pub stop_tol: f64,
    pub max_iterations: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            divergence: DivergenceSpec::kl(),
            lambda: 0.1,
            eta: 0.1,
            k: BallNorm::L2,
            repeats: 5,
            stop_tol: 1e-7,
            max_iterations: 2_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub p: usize,
    pub repeats: usize,
    pub median_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub q_inf: f64,
}

/// Times M+LFBF on the joint KL problem over random instances of the given
/// sizes. Instance generation and problem assembly are not timed.
pub fn bench(sizes: &[usize], seed: u64, cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.repeats == 0 {
        return Err(invalid("repeats must be positive"));
    }
    let solver_cfg = SolverConfig { stop_tol: cfg.stop_tol, max_iterations: cfg.max_iterations, ..Default::default() };
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let inst = random_instance(n, seed)?.with_hyper(cfg.lambda, cfg.eta, cfg.k)?;
        let problem = build_proposed(&inst, &cfg.divergence)?;
        let mut times = Vec::with_capacity(cfg.repeats);
        let mut last = None;
        for _ in 0..cfg.repeats {
            let start = Instant::now();
            let r = solve(&problem, SolverKind::Mlfbf, &solver_cfg)?;
            times.push(start.elapsed().as_secs_f64());
            last = Some(r);
        }
        let r = last.expect("repeats > 0");
        times.sort_by(f64::total_cmp);
        let m = times.len();
        let median = if m % 2 == 1 { times[m / 2] } else { 0.5 * (times[m / 2 - 1] + times[m / 2]) };
        rows.push(BenchRow {
            n,
            p: inst.p(),
            repeats: cfg.repeats,
            median_seconds: median,
            min_seconds: times[0],
            max_seconds: times[m - 1],
            iterations: r.iterations,
            stop_reason: r.stop_reason,
            q_inf: q_infinity(&inst.apply_a(&r.x_final[..n]), inst.z()),
        });
    }
    Ok(rows)
}
