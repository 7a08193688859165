//! Separable divergence `D(p, q) = sum_i Phi(p_i, q_i)` and its prox with
//! translations.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_len, invalid, Result};
use crate::scalar::{prox_divergence, DivergenceSpec, ScalarProxQuery};

/// Coordinate count from which the prox runs on the rayon pool.
pub const PARALLEL_THRESHOLD: usize = 1024;

/// A pair of equally long vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorPair {
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
}

/// `D(p, q)`, `+inf` as soon as one pair leaves the domain.
pub fn divergence_value(spec: &DivergenceSpec, p: &[f64], q: &[f64]) -> Result<f64> {
    check_len("divergence_value", p.len(), q.len())?;
    Ok(p.iter().zip(q).map(|(&a, &b)| spec.perspective_value(a, b)).sum())
}

/// Prox of `gamma * D(. + u, . + v)` at `(p, q)`.
///
/// Each coordinate is `prox_{gamma Phi}(p_i + u_i, q_i + v_i) - (u_i, v_i)`.
pub fn prox_divergence_vector(
    spec: &DivergenceSpec,
    gamma: f64,
    u: &[f64],
    v: &[f64],
    p: &[f64],
    q: &[f64],
) -> Result<VectorPair> {
    let mut out = VectorPair { u: vec![0.0; p.len()], xi: vec![0.0; p.len()] };
    prox_divergence_vector_into(spec, gamma, u, v, p, q, &mut out.u, &mut out.xi, PARALLEL_THRESHOLD)?;
    Ok(out)
}

/// In-place form of [`prox_divergence_vector`] with an explicit parallel
/// threshold.
#[allow(clippy::too_many_arguments)]
pub fn prox_divergence_vector_into(
    spec: &DivergenceSpec,
    gamma: f64,
    u: &[f64],
    v: &[f64],
    p: &[f64],
    q: &[f64],
    out_p: &mut [f64],
    out_q: &mut [f64],
    parallel_threshold: usize,
) -> Result<()> {
    let n = p.len();
    for (name, len) in [("q", q.len()), ("u", u.len()), ("v", v.len()), ("out_p", out_p.len()), ("out_q", out_q.len())] {
        check_len(&format!("prox_divergence_vector ({name})"), n, len)?;
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma must be positive and finite, got {gamma}")));
    }
    let one = |i: usize| -> Result<(f64, f64)> {
        let query = ScalarProxQuery::new(gamma, p[i] + u[i], q[i] + v[i])?;
        let r = prox_divergence(spec, &query)?;
        Ok((r.u - u[i], r.xi - v[i]))
    };
    if n >= parallel_threshold {
        out_p
            .par_iter_mut()
            .zip(out_q.par_iter_mut())
            .enumerate()
            .try_for_each(|(i, (a, b))| {
                let (x, y) = one(i)?;
                *a = x;
                *b = y;
                Ok(())
            })
    } else {
        for i in 0..n {
            let (x, y) = one(i)?;
            out_p[i] = x;
            out_q[i] = y;
        }
        Ok(())
    }
}
