//! Checks of the convergence conditions: invertible Gram sum and a
//! strictly feasible point.

use serde::Serialize;

use super::{solve_mlfbf, ppxa::factor_gram, ProblemSpec, SolverConfig, Term};
use crate::linop::LinearOp;
use crate::simple_prox::{SimpleFn, SimpleKind};

/// Margin pushed into the auxiliary feasibility problem.
const MARGIN: f64 = 1e-4;
/// Equality constraints of a probe point are accepted to this tolerance.
const PROBE_EQ_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub gram_invertible: bool,
    /// Smallest over largest squared Cholesky pivot; 0 when the
    /// factorization failed.
    pub gram_pivot_ratio: f64,
    pub strictly_feasible: bool,
    pub feasible_point: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// Runs both checks with unit weights. Failures become warnings.
pub fn preflight(problem: &ProblemSpec) -> Diagnostics {
    let mut warnings = Vec::new();
    let ones = vec![1.0; problem.operators().len()];
    let (gram_invertible, gram_pivot_ratio) = match factor_gram(problem, &ones) {
        Ok((_, ratio)) => (true, ratio),
        Err(e) => {
            warnings.push(format!("PPXA+ unavailable: {e}"));
            (false, 0.0)
        }
    };

    let zero = vec![0.0; problem.variables()];
    let feasible_point = if is_strictly_feasible(problem, &zero) {
        Some(zero)
    } else {
        match probe(problem) {
            Some(x) if is_strictly_feasible(problem, &x) => Some(x),
            _ => None,
        }
    };
    if feasible_point.is_none() {
        warnings.push("no strictly feasible point found; convergence is not guaranteed".into());
    }
    Diagnostics { gram_invertible, gram_pivot_ratio, strictly_feasible: feasible_point.is_some(), feasible_point, warnings }
}

/// `A x + u > 0`, `B x + v > 0` and every `T_s x` in the relative interior
/// of `dom R_s`.
pub fn is_strictly_feasible(problem: &ProblemSpec, x: &[f64]) -> bool {
    if let Some(d) = problem.divergence() {
        let pos = |op: &LinearOp, off: &[f64]| op.apply(x).iter().zip(off).all(|(a, b)| a + b > 0.0);
        if !pos(&d.a, &d.u) || !pos(&d.b, &d.v) {
            return false;
        }
    }
    problem.terms().iter().all(|t| t.f.in_relative_interior_tol(&t.t.apply(x), PROBE_EQ_TOL))
}

/// Feasibility problem with every domain shrunk by a margin, solved with
/// M+LFBF from zero.
fn probe(problem: &ProblemSpec) -> Option<Vec<f64>> {
    let mut terms = Vec::new();
    let lower = |lo: Vec<f64>| SimpleFn::boxed(lo.clone(), vec![f64::INFINITY; lo.len()]).ok();
    if let Some(d) = problem.divergence() {
        for (op, off) in [(&d.a, &d.u), (&d.b, &d.v)] {
            let f = lower(off.iter().map(|o| MARGIN - o).collect())?;
            terms.push(Term { t: op.clone(), f });
        }
    }
    for t in problem.terms() {
        let dim = t.f.dimension();
        let extra = match t.f.kind() {
            SimpleKind::Simplex { radius } => {
                terms.push(t.clone());
                lower(vec![MARGIN.min(radius / (2.0 * dim as f64)); dim])
            }
            SimpleKind::Box { lo, hi } => {
                let (mut l, mut h) = (lo.clone(), hi.clone());
                for i in 0..dim {
                    if lo[i] < hi[i] {
                        let m = if (hi[i] - lo[i]).is_finite() { MARGIN.min((hi[i] - lo[i]) / 4.0) } else { MARGIN };
                        l[i] += m;
                        h[i] -= m;
                    }
                }
                SimpleFn::boxed(l, h).ok()
            }
            SimpleKind::Ball { center, radius, norm } => SimpleFn::ball(center.clone(), radius - MARGIN.min(radius / 2.0), *norm).ok(),
            SimpleKind::Hyperplane { .. } => Some(t.f.clone()),
            SimpleKind::NegEntropy { .. } | SimpleKind::QuotientQ1 { .. } => lower(vec![MARGIN; dim]),
            SimpleKind::SqDistance { .. } => None,
        };
        if let Some(f) = extra {
            terms.push(Term { t: t.t.clone(), f });
        }
    }
    if terms.is_empty() {
        return None;
    }
    let aux = ProblemSpec::new(problem.variables(), None, terms).ok()?;
    let cfg = SolverConfig { max_iterations: 20_000, stop_tol: 1e-10, ..Default::default() };
    solve_mlfbf(&aux, &cfg).ok().map(|r| r.x_final)
}
