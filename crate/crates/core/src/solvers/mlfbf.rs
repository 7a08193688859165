//! M+LFBF: primal-dual forward-backward-forward iteration, free of linear
//! solves.

use super::{prox_blocks, ProblemSpec, SolveReport, SolverConfig, StopReason, Tracker};
use crate::error::{invalid, Result};
use crate::linop::operator_norm;

/// `beta = (sum_k |M_k|^2)^{1/2}` over every operator of the problem.
pub fn lipschitz_constant(problem: &ProblemSpec) -> f64 {
    problem.operators().into_iter().map(|op| operator_norm(op).powi(2)).sum::<f64>().sqrt()
}

/// Runs M+LFBF with constant step `step_fraction / beta` and zero prox
/// errors. A warm start sets `x_0`; dual variables start at zero.
pub fn solve_mlfbf(problem: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    config.validate(problem)?;
    let beta = lipschitz_constant(problem);
    if !(beta > 0.0) {
        return Err(invalid("all operators are zero"));
    }
    let eps = 0.05 / (beta + 1.0);
    let gamma = config.step_fraction / beta;
    if !(gamma >= eps && gamma <= (1.0 - eps) / beta) {
        return Err(invalid(format!("step {gamma} outside [{eps}, {}]", (1.0 - eps) / beta)));
    }
    let ops = problem.operators();
    let n = problem.variables();
    let scales = vec![1.0 / gamma; ops.len()];

    let mut x = config.warm_start.clone().unwrap_or_else(|| vec![0.0; n]);
    let mut t: Vec<Vec<f64>> = ops.iter().map(|op| vec![0.0; op.rows()]).collect();
    let mut t_hat = t.clone();
    let mut arg = t.clone();
    let mut p = t.clone();
    let mut r = t.clone();
    let mut mx = t.clone();
    let mut x_hat = vec![0.0; n];
    let mut x_tilde = vec![0.0; n];

    let mut tracker = Tracker::new(problem, config);
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        x_hat.copy_from_slice(&x);
        for (op, tk) in ops.iter().zip(&t) {
            op.apply_t_add(tk, -gamma, &mut x_hat);
        }
        for k in 0..ops.len() {
            ops[k].apply_into(&x, &mut mx[k]);
            for i in 0..t_hat[k].len() {
                t_hat[k][i] = t[k][i] + gamma * mx[k][i];
                arg[k][i] = t_hat[k][i] / gamma;
            }
        }
        prox_blocks(problem, &scales, &arg, &mut p)?;
        for k in 0..ops.len() {
            for i in 0..r[k].len() {
                r[k][i] = t_hat[k][i] - gamma * p[k][i];
            }
        }
        x_tilde.copy_from_slice(&x_hat);
        for k in 0..ops.len() {
            ops[k].apply_t_add(&r[k], -gamma, &mut x_tilde);
            ops[k].apply_into(&x_hat, &mut mx[k]);
            // t - t_hat + t_tilde with t_tilde = r + gamma M x_hat
            for i in 0..t[k].len() {
                t[k][i] = t[k][i] - t_hat[k][i] + r[k][i] + gamma * mx[k][i];
            }
        }
        let x_new: Vec<f64> = (0..n).map(|i| x[i] - x_hat[i] + x_tilde[i]).collect();
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

#[cfg(test)]
mod tests {
    use super::super::test_problems::*;
    use super::super::*;
    use super::*;

    #[test]
    fn quadratic_matches_linear_solve() {
        let (p, m, c1, c2) = quadratic();
        let want = quadratic_oracle(&m, &c1, &c2);
        let cfg = SolverConfig { stop_tol: 1e-14, max_iterations: 200_000, ..Default::default() };
        let rep = solve_mlfbf(&p, &cfg).unwrap();
        for (a, b) in rep.x_final.iter().zip(&want) {
            assert!((a - b).abs() < 1e-8, "{:?} vs {want:?}", rep.x_final);
        }
    }

    #[test]
    fn zero_iterations_return_start() {
        let p = diagonal_kl(2);
        let cfg = SolverConfig { max_iterations: 0, warm_start: Some(vec![0.25, 4.0]), ..Default::default() };
        let rep = solve_mlfbf(&p, &cfg).unwrap();
        assert_eq!(rep.x_final, vec![0.25, 4.0]);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.stop_reason, StopReason::MaxIterations);
    }

    #[test]
    fn stop_rule_is_exact() {
        let p = diagonal_kl(4);
        let cfg = SolverConfig { warm_start: Some(vec![0.3, 2.0, 1.0, 5.0]), record_trace: true, ..Default::default() };
        let rep = solve_mlfbf(&p, &cfg).unwrap();
        assert_eq!(rep.stop_reason, StopReason::Tolerance);
        let res = &rep.residual_trace;
        assert!(res[res.len() - 1] < 1e-7);
        assert!(res[..res.len() - 1].iter().all(|r| *r >= 1e-7));
        assert!(res[res.len() - 1] <= res[0]);
    }

    #[test]
    fn step_outside_range_is_rejected() {
        let p = diagonal_kl(2);
        let cfg = SolverConfig { step_fraction: 1.0, ..Default::default() };
        assert!(solve_mlfbf(&p, &cfg).is_err());
    }

    #[test]
    fn agrees_with_ppxa_on_diagonal_kl() {
        let p = diagonal_kl(3);
        let cfg = SolverConfig { stop_tol: 1e-10, max_iterations: 200_000, warm_start: Some(vec![0.2, 0.9, 3.0]), ..Default::default() };
        let a = solve_mlfbf(&p, &cfg).unwrap();
        let b = super::super::solve_ppxa_plus(&p, &cfg).unwrap();
        assert!((a.final_objective - b.final_objective).abs() <= 1e-5 * (1.0 + b.final_objective.abs()));
    }
}
