//! One- and two-dimensional derivative-free searches.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Central finite difference with step `1e-6 * max(1, |x|)`.
pub fn finite_difference<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = 1e-6 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Bisection for a root of `f` on `[lo, hi]`, assuming `f(lo) <= 0 <= f(hi)`
/// or the reverse. Non-finite values are classified by sign.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let flo = f(lo);
    let increasing = !(flo > 0.0);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimisation of a convex `f` on `[a, b]`.
///
/// `anchor` must be a point of `[a, b]` where `f` is finite. When both probes
/// are `+inf` the side containing `anchor` is kept.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, anchor: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= tol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let keep_low = if fc.is_infinite() && fd.is_infinite() {
            anchor < c
        } else {
            fc <= fd
        };
        if keep_low {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let candidates = [(mid, f(mid)), (c, fc), (d, fd), (anchor, f(anchor))];
    candidates
        .iter()
        .filter(|(_, v)| !v.is_nan())
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(t, _)| *t)
        .unwrap_or(mid)
}

/// Settings for [`grid_prox_oracle`].
#[derive(Debug, Clone, Copy)]
pub struct GridOracleConfig {
    /// Grid step of the initial scan.
    pub coarse_step: f64,
    /// Stopping tolerance of the refinement sweeps.
    pub refine_tol: f64,
    /// Maximum refinement sweeps.
    pub max_sweeps: usize,
    /// Rescans of a shrinking window around the best grid point, each ten
    /// times finer than the last. Catches minima in slivers the coarse grid
    /// steps over, such as those hugging a corner of the box.
    pub zoom_levels: usize,
    /// Decades of a log-spaced scan anchored at `lo`, 20 points per decade
    /// per axis. Samples thin cones that leave the corner `lo`.
    pub log_decades: usize,
}

impl Default for GridOracleConfig {
    fn default() -> Self {
        Self { coarse_step: 1e-3, refine_tol: 1e-10, max_sweeps: 400, zoom_levels: 8, log_decades: 12 }
    }
}

/// Minimises a convex two-variable `objective` over the box `[lo, hi]`.
///
/// A uniform grid scan, narrowed by the zoom levels, seeds a refinement that cycles through the coordinate
/// and diagonal directions plus a pattern move, each a golden-section line
/// search clipped to the box. Meant for
/// `gamma * Phi(p) + 0.5 |p - q|^2` style objectives.
pub fn grid_prox_oracle<F: Fn(f64, f64) -> f64>(
    objective: F,
    lo: [f64; 2],
    hi: [f64; 2],
    cfg: GridOracleConfig,
) -> [f64; 2] {
    let n0 = (((hi[0] - lo[0]) / cfg.coarse_step).ceil() as usize).max(1);
    let n1 = (((hi[1] - lo[1]) / cfg.coarse_step).ceil() as usize).max(1);
    let mut best = [lo[0], lo[1]];
    let mut best_val = f64::INFINITY;
    scan(&objective, lo, hi, [n0, n1], &mut best, &mut best_val);
    let offsets: Vec<f64> = (0..=20 * cfg.log_decades).map(|k| 10f64.powf(-(k as f64) / 20.0)).collect();
    for &a in &offsets {
        for &b in &offsets {
            let p = [lo[0] + a * (hi[0] - lo[0]), lo[1] + b * (hi[1] - lo[1])];
            let v = objective(p[0], p[1]);
            if v < best_val {
                best_val = v;
                best = p;
            }
        }
    }
    let mut h = [(hi[0] - lo[0]) / n0 as f64, (hi[1] - lo[1]) / n1 as f64];
    for _ in 0..cfg.zoom_levels {
        let wlo = [(best[0] - 2.0 * h[0]).max(lo[0]), (best[1] - 2.0 * h[1]).max(lo[1])];
        let whi = [(best[0] + 2.0 * h[0]).min(hi[0]), (best[1] + 2.0 * h[1]).min(hi[1])];
        scan(&objective, wlo, whi, [40, 40], &mut best, &mut best_val);
        h = [h[0] / 10.0, h[1] / 10.0];
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let dirs = [[1.0, 0.0], [0.0, 1.0], [h, h], [h, -h]];
    let mut x = best;
    for _ in 0..cfg.max_sweeps {
        let start = x;
        for d in dirs {
            x = line_min(&objective, x, d, lo, hi, cfg.refine_tol);
        }
        let disp = [x[0] - start[0], x[1] - start[1]];
        let len = disp[0].hypot(disp[1]);
        if len <= cfg.refine_tol * (1.0 + x[0].abs().max(x[1].abs())) {
            break;
        }
        // Pattern move along the sweep displacement.
        x = line_min(&objective, x, [disp[0] / len, disp[1] / len], lo, hi, cfg.refine_tol);
    }
    x
}

fn scan<F: Fn(f64, f64) -> f64>(f: &F, lo: [f64; 2], hi: [f64; 2], n: [usize; 2], best: &mut [f64; 2], best_val: &mut f64) {
    for i in 0..=n[0] {
        let x = lo[0] + (hi[0] - lo[0]) * i as f64 / n[0] as f64;
        for j in 0..=n[1] {
            let y = lo[1] + (hi[1] - lo[1]) * j as f64 / n[1] as f64;
            let v = f(x, y);
            if v < *best_val {
                *best_val = v;
                *best = [x, y];
            }
        }
    }
}

fn line_min<F: Fn(f64, f64) -> f64>(
    f: &F,
    x: [f64; 2],
    d: [f64; 2],
    lo: [f64; 2],
    hi: [f64; 2],
    tol: f64,
) -> [f64; 2] {
    let mut tlo = f64::NEG_INFINITY;
    let mut thi = f64::INFINITY;
    for k in 0..2 {
        if d[k] != 0.0 {
            let a = (lo[k] - x[k]) / d[k];
            let b = (hi[k] - x[k]) / d[k];
            tlo = tlo.max(a.min(b));
            thi = thi.min(a.max(b));
        }
    }
    tlo = tlo.min(0.0);
    thi = thi.max(0.0);
    let g = |t: f64| f(x[0] + t * d[0], x[1] + t * d[1]);
    let t = golden_section_min(g, tlo, thi, 0.0, tol * 1e-2);
    let cand = [x[0] + t * d[0], x[1] + t * d[1]];
    if f(cand[0], cand[1]) <= f(x[0], x[1]) {
        cand
    } else {
        x
    }
}

/// Closest point to `p` on the graph `{(t, g(t)) : t in [t_lo, t_hi]}`.
///
/// Dense scan with `samples` points, then golden-section refinement between
/// the neighbours of the best sample. Returns `(t, g(t))`.
pub fn graph_projection_oracle<G: Fn(f64) -> f64>(
    g: G,
    p: [f64; 2],
    t_lo: f64,
    t_hi: f64,
    samples: usize,
) -> [f64; 2] {
    let dist = |t: f64| {
        let v = g(t);
        if v.is_finite() {
            (t - p[0]).powi(2) + (v - p[1]).powi(2)
        } else {
            f64::INFINITY
        }
    };
    let n = samples.max(2);
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..=n {
        let t = t_lo + (t_hi - t_lo) * i as f64 / n as f64;
        let v = dist(t);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let at = |i: usize| t_lo + (t_hi - t_lo) * i as f64 / n as f64;
    let a = at(best_i.saturating_sub(1));
    let b = at((best_i + 1).min(n));
    let t = golden_section_min(dist, a, b, at(best_i), 1e-15);
    [t, g(t)]
}
