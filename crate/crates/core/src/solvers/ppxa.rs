//! PPXA+: parallel proximal algorithm with one fixed linear solve per
//! iteration.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{prox_blocks, ProblemSpec, SolveReport, SolverConfig, StopReason, Tracker};
use crate::error::{Error, Result};

/// Pivots below this fraction of the largest one count as singular.
pub(crate) const PIVOT_RATIO_TOL: f64 = 1e-13;

/// Cholesky factor of `sum_k w_k M_k^T M_k` together with the ratio of the
/// smallest to the largest squared pivot.
pub(crate) fn factor_gram(problem: &ProblemSpec, weights: &[f64]) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = problem.variables();
    let mut g = DMatrix::zeros(n, n);
    for (op, w) in problem.operators().into_iter().zip(weights) {
        op.gram_add(&mut g, *w, 0);
    }
    let chol = Cholesky::new(g).ok_or_else(|| Error::Factorization("Gram sum is not positive definite".into()))?;
    let d = chol.l_dirty().diagonal();
    let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v * v), hi.max(v * v)));
    let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(ratio > PIVOT_RATIO_TOL) {
        return Err(Error::Factorization(format!("Gram sum is numerically singular (pivot ratio {ratio:.3e})")));
    }
    Ok((chol, ratio))
}

/// Runs PPXA+ with constant relaxation and zero prox errors.
pub fn solve_ppxa_plus(problem: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    config.validate(problem)?;
    let ops = problem.operators();
    let w = config.operator_weights(problem);
    let (chol, _) = factor_gram(problem, &w)?;
    let n = problem.variables();
    let lambda = config.relaxation;

    let mut t: Vec<Vec<f64>> = ops.iter().map(|op| vec![0.0; op.rows()]).collect();
    let mut r = t.clone();
    let scales: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();

    // Q (sum_k w_k M_k^T z_k)
    let q_apply = |z: &[Vec<f64>]| -> Vec<f64> {
        let mut rhs = vec![0.0; n];
        for ((op, zk), wk) in ops.iter().zip(z).zip(&w) {
            op.apply_t_add(zk, *wk, &mut rhs);
        }
        chol.solve(&DVector::from_vec(rhs)).data.into()
    };

    let mut x = match &config.warm_start {
        Some(x0) => {
            for (op, tk) in ops.iter().zip(t.iter_mut()) {
                op.apply_into(x0, tk);
            }
            q_apply(&t)
        }
        None => vec![0.0; n],
    };

    let mut tracker = Tracker::new(problem, config);
    let mut z = vec![0.0; n];
    let mut mz: Vec<Vec<f64>> = t.clone();
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        prox_blocks(problem, &scales, &t, &mut r)?;
        let y = q_apply(&r);
        for i in 0..n {
            z[i] = 2.0 * y[i] - x[i];
        }
        for k in 0..ops.len() {
            ops[k].apply_into(&z, &mut mz[k]);
            for ((tk, m), rk) in t[k].iter_mut().zip(&mz[k]).zip(&r[k]) {
                *tk += lambda * (m - rk);
            }
        }
        let x_new: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| xi + lambda * (yi - xi)).collect();
        iterations += 1;
        let done = tracker.step(&x, &x_new)?;
        x = x_new;
        if done {
            stop = StopReason::Tolerance;
            break;
        }
    }
    tracker.finish(x, iterations, stop)
}
