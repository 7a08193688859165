//! Conjugates of the generators and projection onto their epigraphs.

use serde::Serialize;

use crate::error::Result;
use crate::scalar::{lambert_w_of_exp, prox_divergence, DivergenceKind, DivergenceSpec, ScalarProxQuery};

/// A point `(u*, xi*)` of the plane where `epi phi*` lives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugatePoint {
    pub u_star: f64,
    pub xi_star: f64,
}

/// `phi*(s) = sup_z s z - phi(z)`, possibly `+inf`.
pub fn conjugate_value(spec: &DivergenceSpec, s: f64) -> f64 {
    // The kappa term shifts the argument and adds a constant:
    // (phi + c_u z + c_xi)^*(s) = phi^*(s - c_u) - c_xi.
    let (cu, cx) = spec.linear_shift();
    let s = s - cu;
    let inf = f64::INFINITY;
    let v = match spec.kind() {
        DivergenceKind::Kl => s.exp_m1(),
        DivergenceKind::Jeffreys => {
            let w = lambert_w_of_exp(1.0 - s);
            w + 1.0 / w + s - 2.0
        }
        DivergenceKind::Hellinger => {
            if s < 1.0 {
                s / (1.0 - s)
            } else {
                inf
            }
        }
        DivergenceKind::ChiSquare => {
            if s >= -2.0 {
                s * (s + 4.0) / 4.0
            } else {
                -1.0
            }
        }
        DivergenceKind::Renyi => {
            let a = spec.alpha().unwrap_or(2.0);
            if s >= 0.0 {
                (a - 1.0) * (s / a).powf(a / (a - 1.0))
            } else {
                0.0
            }
        }
        DivergenceKind::IAlpha => {
            let a = spec.alpha().unwrap_or(0.5);
            if s <= a {
                (1.0 - a) * ((1.0 - s / a).powf(a / (a - 1.0)) - 1.0)
            } else {
                inf
            }
        }
    };
    if v.is_finite() {
        v - cx
    } else {
        v
    }
}

/// Euclidean projection of `point` onto `epi phi*`.
///
/// With `(p, q) = prox_Phi(u*, -xi*)` the projection is
/// `(u* - p, xi* + q)`.
pub fn project_epi_conjugate(spec: &DivergenceSpec, point: ConjugatePoint) -> Result<ConjugatePoint> {
    let q = ScalarProxQuery::new(1.0, point.u_star, -point.xi_star)?;
    let r = prox_divergence(spec, &q)?;
    Ok(ConjugatePoint { u_star: point.u_star - r.u, xi_star: point.xi_star + r.xi })
}
