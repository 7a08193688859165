//! Slow, brute-force reference implementations.
//!
//! Nothing in here shares code with `divprox`. Every routine is chosen to be
//! easy to audit rather than fast: grid scans, golden-section searches,
//! bisection, closed-form cubic roots, Jacobi rotations and textbook NNLS.

pub mod linalg;
pub mod search;

pub use linalg::{jacobi_singular_values, nnls, solve_dense, spectral_norm};
pub use search::{
    bisect_root, finite_difference, golden_section_min, graph_projection_oracle, grid_prox_oracle,
    GridOracleConfig,
};

/// Real roots of `a x^3 + b x^2 + c x + d`, sorted ascending.
///
/// Repeated roots are reported once per multiplicity detected by the
/// discriminant test. Returns `None` when `a == 0`.
pub fn cardano_cubic(a: f64, b: f64, c: f64, d: f64) -> Option<Vec<f64>> {
    if a == 0.0 || !a.is_finite() {
        return None;
    }
    let (b, c, d) = (b / a, c / a, d / a);
    // Depressed cubic t^3 + p t + q with x = t - b/3.
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        vec![u + v - shift]
    } else if disc == 0.0 {
        let u = (-q / 2.0).cbrt();
        if u == 0.0 {
            vec![-shift]
        } else {
            vec![2.0 * u - shift, -u - shift]
        }
    } else {
        let r = (-p / 3.0).sqrt();
        let cos_arg = (-q / 2.0 / (r * r * r)).clamp(-1.0, 1.0);
        let theta = cos_arg.acos();
        (0..3)
            .map(|k| 2.0 * r * ((theta - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() - shift)
            .collect()
    };
    // One Newton polish per root against the original monic cubic.
    for x in roots.iter_mut() {
        let f = ((*x + b) * *x + c) * *x + d;
        let df = (3.0 * *x + 2.0 * b) * *x + c;
        if df != 0.0 && df.is_finite() {
            let nx = *x - f / df;
            let nf = ((nx + b) * nx + c) * nx + d;
            if nf.abs() < f.abs() {
                *x = nx;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    Some(roots)
}

/// Principal-branch Lambert W by bisection on `w e^w = x`.
///
/// Valid for `x >= -1/e`; returns NaN below that.
pub fn lambert_w_bisect(x: f64) -> f64 {
    let branch_point = -(-1.0f64).exp();
    if x.is_nan() || x < branch_point {
        return f64::NAN;
    }
    if x == 0.0 {
        return 0.0;
    }
    if x > 0.0 {
        // w + ln w = ln x is monotone in w > 0 and avoids overflow.
        let l = x.ln();
        let g = |w: f64| w + w.ln() - l;
        let hi = if l > 1.0 { l } else { 1.0 };
        let lo = if l < 0.0 { x / std::f64::consts::E } else { 1e-300 };
        return bisect_root(g, lo.min(hi * 0.5), hi, 400);
    }
    bisect_root(|w: f64| w * w.exp() - x, -1.0, 0.0, 400)
}

/// Projection of `y` onto `{x >= 0, sum x = radius}` by bisection on the
/// water level.
pub fn simplex_projection_bisect(y: &[f64], radius: f64) -> Vec<f64> {
    let mass = |theta: f64| y.iter().map(|&v| (v - theta).max(0.0)).sum::<f64>() - radius;
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = hi - radius - y.iter().map(|v| (hi - v).abs()).sum::<f64>() - 1.0;
    // `mass` is decreasing in theta.
    let theta = bisect_root(|t| -mass(t), lo, hi, 300);
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Projection onto the l1 ball `{x : |x - z|_1 <= eta}` by enumerating every
/// sign pattern in `{-1, 0, 1}^d`. Only intended for `d <= 6`.
pub fn l1_ball_projection_enumerate(y: &[f64], z: &[f64], eta: f64) -> Vec<f64> {
    let d = y.len();
    let w: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
    if w.iter().map(|v| v.abs()).sum::<f64>() <= eta {
        return y.to_vec();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = 3usize.pow(d as u32);
    for code in 0..total {
        let mut signs = vec![0.0; d];
        let mut c = code;
        for s in signs.iter_mut() {
            *s = (c % 3) as f64 - 1.0;
            c /= 3;
        }
        let support = signs.iter().filter(|s| **s != 0.0).count();
        if support == 0 {
            continue;
        }
        let theta = (signs.iter().zip(&w).map(|(s, v)| s * v).sum::<f64>() - eta) / support as f64;
        if theta < 0.0 {
            continue;
        }
        let x: Vec<f64> = signs
            .iter()
            .zip(&w)
            .map(|(s, v)| if *s == 0.0 { 0.0 } else { v - theta * s })
            .collect();
        if signs.iter().zip(&x).any(|(s, v)| *s != 0.0 && s * v < -1e-15) {
            continue;
        }
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        if (l1 - eta).abs() > 1e-9 * (1.0 + eta) {
            continue;
        }
        let dist: f64 = x.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().map_or(true, |(bd, _)| dist < *bd) {
            best = Some((dist, x));
        }
    }
    let x = best.expect("some sign pattern is always feasible").1;
    x.iter().zip(z).map(|(a, b)| a + b).collect()
}
