//! Principal branch of the Lambert W function.

use std::f64::consts::E;

use crate::error::{invalid, Result};

/// `W(e^tau)`, the positive root of `w + ln w = tau`.
///
/// Works directly in the log domain so that very large `tau` (where `e^tau`
/// overflows) is handled without loss.
pub fn lambert_w_of_exp(tau: f64) -> f64 {
    if tau.is_nan() {
        return f64::NAN;
    }
    if tau == f64::INFINITY {
        return f64::INFINITY;
    }
    if tau < -40.0 {
        // W(x) = x - x^2 + O(x^3) for tiny x = e^tau.
        let x = tau.exp();
        return x - x * x;
    }
    let g = |w: f64| w + w.ln() - tau;
    let (mut lo, mut hi) = if tau >= 1.0 {
        let l = tau.ln();
        let lo = tau - l + 0.5 * l / tau;
        let hi = tau - l + E / (E - 1.0) * l / tau;
        (lo, hi.max(1.0))
    } else {
        // For tau < 1 the root is below 1 and above e^tau / e.
        ((tau - 1.0).exp() * 0.5, 1.0)
    };
    if g(lo) > 0.0 {
        lo = 0.5 * lo;
    }
    if g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut w = 0.5 * (lo + hi);
    for _ in 0..100 {
        let f = g(w);
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        // Halley step for g(w) = w + ln w - tau: g' = 1 + 1/w, g'' = -1/w^2.
        let d1 = 1.0 + 1.0 / w;
        let d2 = -1.0 / (w * w);
        let step = f / d1 / (1.0 - 0.5 * f * d2 / (d1 * d1));
        let mut next = w - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= 1e-16 * w {
            w = next;
            break;
        }
        w = next;
    }
    w
}

/// Principal-branch `W(x)` for `x >= -1/e`.
pub fn lambert_w(x: f64) -> Result<f64> {
    let branch = -(-1.0f64).exp();
    if x.is_nan() || x < branch {
        return Err(invalid(format!("lambert_w requires x >= -1/e, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x > 0.0 {
        return Ok(lambert_w_of_exp(x.ln()));
    }
    if x == branch {
        return Ok(-1.0);
    }
    // Series around the branch point, then Halley on w e^w - x.
    let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
    let mut w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    if x > -0.25 {
        // Closer to the origin the Taylor series at 0 is the better seed.
        w = x - x * x + 1.5 * x * x * x;
    }
    for _ in 0..60 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let next = w - f / denom;
        if !next.is_finite() {
            break;
        }
        let done = (next - w).abs() <= 1e-16 * w.abs().max(1e-300);
        w = next.max(-1.0);
        if done {
            break;
        }
    }
    Ok(w)
}
