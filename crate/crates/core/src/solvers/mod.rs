//! Problem statement and the two parallel proximal solvers.
//!
//! Problems have the form
//! `min_x D(A x + u, B x + v) + sum_s R_s(T_s x)`
//! where `D` is a separable divergence and every `R_s` is a simple function.

mod mlfbf;
mod ppxa;
mod preflight;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use mlfbf::solve_mlfbf;
pub use ppxa::solve_ppxa_plus;
pub use preflight::{preflight, Diagnostics};

use crate::error::{check_len, invalid, Error, Result};
use crate::linop::LinearOp;
use crate::scalar::DivergenceSpec;
use crate::simple_prox::SimpleFn;
use crate::vector_prox::prox_divergence_vector_into;

/// Membership tolerance used by [`evaluate_objective`].
pub const INDICATOR_TOL: f64 = 1e-9;
/// Looser tolerance used when reporting solver iterates, which approach
/// constraint sets only in the limit.
pub const REPORT_TOL: f64 = 1e-6;

/// `D(A x + u, B x + v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceTerm {
    pub spec: DivergenceSpec,
    #[serde(rename = "A")]
    pub a: LinearOp,
    #[serde(rename = "B")]
    pub b: LinearOp,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// `R(T x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(rename = "T")]
    pub t: LinearOp,
    #[serde(rename = "fn")]
    pub f: SimpleFn,
}

/// A validated instance with conformal dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem", into = "RawProblem")]
pub struct ProblemSpec {
    variables: usize,
    divergence: Option<DivergenceTerm>,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    variables: usize,
    #[serde(default)]
    divergence: Option<DivergenceTerm>,
    #[serde(default)]
    terms: Vec<Term>,
}

impl TryFrom<RawProblem> for ProblemSpec {
    type Error = Error;

    fn try_from(r: RawProblem) -> Result<Self> {
        ProblemSpec::new(r.variables, r.divergence, r.terms)
    }
}

impl From<ProblemSpec> for RawProblem {
    fn from(p: ProblemSpec) -> Self {
        RawProblem { variables: p.variables, divergence: p.divergence, terms: p.terms }
    }
}

impl ProblemSpec {
    pub fn new(variables: usize, divergence: Option<DivergenceTerm>, terms: Vec<Term>) -> Result<Self> {
        if variables == 0 {
            return Err(invalid("problem needs at least one variable"));
        }
        if divergence.is_none() && terms.is_empty() {
            return Err(invalid("problem has neither a divergence nor any term"));
        }
        if let Some(d) = &divergence {
            check_len("columns of A", variables, d.a.cols())?;
            check_len("columns of B", variables, d.b.cols())?;
            let p = d.a.rows();
            check_len("rows of B", p, d.b.rows())?;
            check_len("length of u", p, d.u.len())?;
            check_len("length of v", p, d.v.len())?;
            if d.u.iter().chain(&d.v).any(|x| !x.is_finite()) {
                return Err(invalid("u and v must be finite"));
            }
        }
        for (s, t) in terms.iter().enumerate() {
            check_len(&format!("columns of T_{}", s + 1), variables, t.t.cols())?;
            check_len(&format!("rows of T_{}", s + 1), t.f.dimension(), t.t.rows())?;
        }
        Ok(Self { variables, divergence, terms })
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn divergence(&self) -> Option<&DivergenceTerm> {
        self.divergence.as_ref()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// All operators in dual-variable order: `A, B` (if present), then
    /// `T_1 .. T_S`.
    pub(crate) fn operators(&self) -> Vec<&LinearOp> {
        let mut ops = Vec::with_capacity(self.terms.len() + 2);
        if let Some(d) = &self.divergence {
            ops.push(&d.a);
            ops.push(&d.b);
        }
        ops.extend(self.terms.iter().map(|t| &t.t));
        ops
    }
}

/// Objective at `x` with indicator tolerance `1e-9`.
pub fn evaluate_objective(problem: &ProblemSpec, x: &[f64]) -> Result<f64> {
    evaluate_objective_tol(problem, x, INDICATOR_TOL)
}

/// Objective at `x`; indicator membership uses `tol`, and divergence
/// arguments in `[-tol, 0)` are read as 0.
pub fn evaluate_objective_tol(problem: &ProblemSpec, x: &[f64], tol: f64) -> Result<f64> {
    check_len("objective argument", problem.variables, x.len())?;
    let mut total = 0.0;
    if let Some(d) = &problem.divergence {
        let snap = |v: f64| if v < 0.0 && v >= -tol { 0.0 } else { v };
        let p = d.a.apply(x);
        let q = d.b.apply(x);
        for i in 0..p.len() {
            total += d.spec.perspective_value(snap(p[i] + d.u[i]), snap(q[i] + d.v[i]));
        }
    }
    for t in &problem.terms {
        total += t.f.value(&t.t.apply(x), tol)?;
    }
    Ok(total)
}

/// Which algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "ppxa+")]
    PpxaPlus,
    #[serde(rename = "mlfbf")]
    Mlfbf,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ppxa+" | "ppxa-plus" | "ppxaplus" => Ok(SolverKind::PpxaPlus),
            "mlfbf" | "m+lfbf" => Ok(SolverKind::Mlfbf),
            other => Err(invalid(format!("unknown solver '{other}'"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::PpxaPlus => "ppxa+",
            SolverKind::Mlfbf => "mlfbf",
        })
    }
}

/// Settings shared by both solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// `omega_0 .. omega_S` for PPXA+; `omega_0` weighs the divergence.
    /// All ones when absent.
    pub weights: Option<Vec<f64>>,
    /// Constant relaxation `lambda_n` of PPXA+, in `(0, 2)`.
    pub relaxation: f64,
    /// M+LFBF step is `step_fraction / beta`.
    pub step_fraction: f64,
    pub max_iterations: usize,
    /// Stop when `|x_{n+1} - x_n| < stop_tol |x_n|`.
    pub stop_tol: f64,
    pub record_trace: bool,
    /// Initial primal point; dual variables then start at `T_s x`.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            weights: None,
            relaxation: 1.8,
            step_fraction: 0.9,
            max_iterations: 50_000,
            stop_tol: 1e-7,
            record_trace: false,
            warm_start: None,
        }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self, problem: &ProblemSpec) -> Result<()> {
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(invalid(format!("relaxation must lie in (0, 2), got {}", self.relaxation)));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(invalid("stop_tol must be nonnegative"));
        }
        if let Some(w) = &self.weights {
            let want = problem.terms.len() + usize::from(problem.divergence.is_some());
            check_len("solver weights", want, w.len())?;
            if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(invalid("solver weights must be positive"));
            }
        }
        if let Some(x) = &self.warm_start {
            check_len("warm start", problem.variables, x.len())?;
        }
        Ok(())
    }

    /// Per-operator weights in [`ProblemSpec::operators`] order.
    pub(crate) fn operator_weights(&self, problem: &ProblemSpec) -> Vec<f64> {
        let has_div = problem.divergence.is_some();
        let base: Vec<f64> = match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0; problem.terms.len() + usize::from(has_div)],
        };
        let mut out = Vec::new();
        if has_div {
            out.push(base[0]);
            out.push(base[0]);
            out.extend_from_slice(&base[1..]);
        } else {
            out.extend_from_slice(&base);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxIterations,
}

/// Outcome of a solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub x_final: Vec<f64>,
    /// Objective after each iteration, when traced.
    pub objective_trace: Vec<f64>,
    /// `|x_{n+1} - x_n| / |x_n|` after each iteration, when traced.
    pub residual_trace: Vec<f64>,
    /// Elapsed seconds after each iteration, when traced.
    pub time_trace: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub wall_time: f64,
    /// Objective at `x_final` with the reporting tolerance.
    pub final_objective: f64,
    /// Last relative iterate change.
    pub final_residual: f64,
}

/// Runs the chosen solver.
pub fn solve(problem: &ProblemSpec, kind: SolverKind, config: &SolverConfig) -> Result<SolveReport> {
    match kind {
        SolverKind::PpxaPlus => solve_ppxa_plus(problem, config),
        SolverKind::Mlfbf => solve_mlfbf(problem, config),
    }
}

/// Dual proximal step shared by both solvers: for every block writes
/// `prox_{scale f}` of the block argument.
pub(crate) fn prox_blocks(problem: &ProblemSpec, scales: &[f64], args: &[Vec<f64>], out: &mut [Vec<f64>]) -> Result<()> {
    let mut k = 0;
    if let Some(d) = &problem.divergence {
        let (o0, o1) = out.split_at_mut(1);
        prox_divergence_vector_into(
            &d.spec,
            scales[0],
            &d.u,
            &d.v,
            &args[0],
            &args[1],
            &mut o0[0],
            &mut o1[0],
            crate::vector_prox::PARALLEL_THRESHOLD,
        )?;
        k = 2;
    }
    for (s, t) in problem.terms.iter().enumerate() {
        crate::simple_prox::prox_simple_into(&t.f, scales[k + s], &args[k + s], &mut out[k + s])?;
    }
    Ok(())
}

/// Bookkeeping for the stopping rule and traces.
pub(crate) struct Tracker<'a> {
    problem: &'a ProblemSpec,
    record: bool,
    stop_tol: f64,
    start: std::time::Instant,
    pub objective: Vec<f64>,
    pub residual: Vec<f64>,
    pub time: Vec<f64>,
    pub last_residual: f64,
}

impl<'a> Tracker<'a> {
    pub fn new(problem: &'a ProblemSpec, config: &SolverConfig) -> Self {
        Self {
            problem,
            record: config.record_trace,
            stop_tol: config.stop_tol,
            start: std::time::Instant::now(),
            objective: Vec::new(),
            residual: Vec::new(),
            time: Vec::new(),
            last_residual: f64::NAN,
        }
    }

    /// Records one iteration and tells whether the stopping rule fires.
    pub fn step(&mut self, x_old: &[f64], x_new: &[f64]) -> Result<bool> {
        let diff = x_old.iter().zip(x_new).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let base = crate::linop::norm2(x_old);
        let rel = if base > 0.0 { diff / base } else { diff };
        self.last_residual = rel;
        if self.record {
            self.objective.push(evaluate_objective_tol(self.problem, x_new, REPORT_TOL)?);
            self.residual.push(rel);
            self.time.push(self.start.elapsed().as_secs_f64());
        }
        Ok(diff < self.stop_tol * base || diff == 0.0)
    }

    pub fn finish(self, x: Vec<f64>, iterations: usize, stop_reason: StopReason) -> Result<SolveReport> {
        let final_objective = evaluate_objective_tol(self.problem, &x, REPORT_TOL)?;
        Ok(SolveReport {
            x_final: x,
            objective_trace: self.objective,
            residual_trace: self.residual,
            time_trace: self.time,
            iterations,
            stop_reason,
            wall_time: self.start.elapsed().as_secs_f64(),
            final_objective,
            final_residual: self.last_residual,
        })
    }
}
