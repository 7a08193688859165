//! Proxes and projections of the simple functions used as regularizers and
//! constraints.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::scalar::lambert_w_of_exp;
use crate::serde_ext::ext_vec;
use crate::vector_prox::PARALLEL_THRESHOLD;

/// Norm of a ball constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallNorm {
    L1,
    L2,
    LInf,
}

impl BallNorm {
    pub fn from_k(k: f64) -> Result<Self> {
        if k == 1.0 {
            Ok(BallNorm::L1)
        } else if k == 2.0 {
            Ok(BallNorm::L2)
        } else if k == f64::INFINITY {
            Ok(BallNorm::LInf)
        } else {
            Err(invalid(format!("ball norm must be 1, 2 or inf, got {k}")))
        }
    }

    pub fn k(self) -> f64 {
        match self {
            BallNorm::L1 => 1.0,
            BallNorm::L2 => 2.0,
            BallNorm::LInf => f64::INFINITY,
        }
    }

    pub fn norm(self, w: impl Iterator<Item = f64>) -> f64 {
        match self {
            BallNorm::L1 => w.map(f64::abs).sum(),
            BallNorm::L2 => w.map(|x| x * x).sum::<f64>().sqrt(),
            BallNorm::LInf => w.map(f64::abs).fold(0.0, f64::max),
        }
    }
}

impl std::str::FromStr for BallNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(BallNorm::L1),
            "2" => Ok(BallNorm::L2),
            "inf" | "infinity" => Ok(BallNorm::LInf),
            other => Err(invalid(format!("ball norm must be 1, 2 or inf, got '{other}'"))),
        }
    }
}

impl Serialize for BallNorm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BallNorm::L1 => s.serialize_u8(1),
            BallNorm::L2 => s.serialize_u8(2),
            BallNorm::LInf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BallNorm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let r = match Raw::deserialize(d)? {
            Raw::Num(k) => BallNorm::from_k(k),
            Raw::Str(s) => s.parse(),
        };
        r.map_err(serde::de::Error::custom)
    }
}

/// The catalog of simple functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SimpleKind {
    /// Indicator of `{x >= 0, sum x = radius}`.
    Simplex { radius: f64 },
    /// Indicator of `{lo <= x <= hi}`; bounds may be infinite.
    Box {
        #[serde(with = "ext_vec")]
        lo: Vec<f64>,
        #[serde(with = "ext_vec")]
        hi: Vec<f64>,
    },
    /// Indicator of `{|x - center|_k <= radius}`.
    Ball { center: Vec<f64>, radius: f64, norm: BallNorm },
    /// Indicator of `{<normal, x> = offset}`.
    Hyperplane { normal: Vec<f64>, offset: f64 },
    /// `weight * sum x_i ln x_i` on `x >= 0`.
    NegEntropy { weight: f64 },
    /// `|x - center|^2`.
    SqDistance { center: Vec<f64> },
    /// `sum max(x_i / z_i, z_i / x_i)` on `x > 0`.
    QuotientQ1 { reference: Vec<f64> },
}

/// A validated simple function of a fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSimple", into = "RawSimple")]
pub struct SimpleFn {
    kind: SimpleKind,
    dimension: usize,
}

#[derive(Serialize, Deserialize)]
struct RawSimple {
    dimension: usize,
    #[serde(flatten)]
    kind: SimpleKind,
}

impl TryFrom<RawSimple> for SimpleFn {
    type Error = Error;

    fn try_from(r: RawSimple) -> Result<Self> {
        SimpleFn::new(r.kind, r.dimension)
    }
}

impl From<SimpleFn> for RawSimple {
    fn from(f: SimpleFn) -> Self {
        RawSimple { dimension: f.dimension, kind: f.kind }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl SimpleFn {
    pub fn new(kind: SimpleKind, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("dimension must be positive"));
        }
        match &kind {
            SimpleKind::Simplex { radius } => positive("simplex radius", *radius)?,
            SimpleKind::Box { lo, hi } => {
                check_len("box lower bound", dimension, lo.len())?;
                check_len("box upper bound", dimension, hi.len())?;
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || *l == f64::INFINITY || *h == f64::NEG_INFINITY) {
                    return Err(invalid("box bounds must satisfy lo <= hi"));
                }
            }
            SimpleKind::Ball { center, radius, .. } => {
                check_len("ball center", dimension, center.len())?;
                positive("ball radius", *radius)?;
            }
            SimpleKind::Hyperplane { normal, offset } => {
                check_len("hyperplane normal", dimension, normal.len())?;
                if normal.iter().all(|a| *a == 0.0) || !offset.is_finite() {
                    return Err(invalid("hyperplane normal must be nonzero and offset finite"));
                }
            }
            SimpleKind::NegEntropy { weight } => positive("entropy weight", *weight)?,
            SimpleKind::SqDistance { center } => check_len("distance center", dimension, center.len())?,
            SimpleKind::QuotientQ1 { reference } => {
                check_len("quotient reference", dimension, reference.len())?;
                if reference.iter().any(|z| !(*z > 0.0 && z.is_finite())) {
                    return Err(invalid("quotient reference must be strictly positive"));
                }
            }
        }
        Ok(Self { kind, dimension })
    }

    pub fn simplex(dimension: usize, radius: f64) -> Result<Self> {
        Self::new(SimpleKind::Simplex { radius }, dimension)
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let n = lo.len();
        Self::new(SimpleKind::Box { lo, hi }, n)
    }

    pub fn ball(center: Vec<f64>, radius: f64, norm: BallNorm) -> Result<Self> {
        let n = center.len();
        Self::new(SimpleKind::Ball { center, radius, norm }, n)
    }

    pub fn hyperplane(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let n = normal.len();
        Self::new(SimpleKind::Hyperplane { normal, offset }, n)
    }

    pub fn neg_entropy(dimension: usize, weight: f64) -> Result<Self> {
        Self::new(SimpleKind::NegEntropy { weight }, dimension)
    }

    pub fn sq_distance(center: Vec<f64>) -> Result<Self> {
        let n = center.len();
        Self::new(SimpleKind::SqDistance { center }, n)
    }

    pub fn quotient_q1(reference: Vec<f64>) -> Result<Self> {
        let n = reference.len();
        Self::new(SimpleKind::QuotientQ1 { reference }, n)
    }

    pub fn kind(&self) -> &SimpleKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Whether the function is an indicator.
    pub fn is_indicator(&self) -> bool {
        matches!(
            self.kind,
            SimpleKind::Simplex { .. } | SimpleKind::Box { .. } | SimpleKind::Ball { .. } | SimpleKind::Hyperplane { .. }
        )
    }

    /// Value at `y`. Indicator membership and the sign constraint of the
    /// entropy use the absolute tolerance `tol`.
    pub fn value(&self, y: &[f64], tol: f64) -> Result<f64> {
        check_len("simple function argument", self.dimension, y.len())?;
        let inf = f64::INFINITY;
        let ind = |ok: bool| if ok { 0.0 } else { inf };
        Ok(match &self.kind {
            SimpleKind::Simplex { radius } => {
                let s: f64 = y.iter().sum();
                ind(y.iter().all(|v| *v >= -tol) && (s - radius).abs() <= tol * radius.max(1.0))
            }
            SimpleKind::Box { lo, hi } => ind(y.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)),
            SimpleKind::Ball { center, radius, norm } => {
                ind(norm.norm(y.iter().zip(center).map(|(a, b)| a - b)) <= radius + tol)
            }
            SimpleKind::Hyperplane { normal, offset } => {
                let s: f64 = y.iter().zip(normal).map(|(a, b)| a * b).sum();
                ind((s - offset).abs() <= tol * offset.abs().max(1.0))
            }
            SimpleKind::NegEntropy { weight } => {
                let mut acc = 0.0;
                for &t in y {
                    if t > 0.0 {
                        acc += t * t.ln();
                    } else if t < -tol {
                        return Ok(inf);
                    }
                }
                weight * acc
            }
            SimpleKind::SqDistance { center } => y.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum(),
            SimpleKind::QuotientQ1 { reference } => {
                let mut acc = 0.0;
                for (&t, &z) in y.iter().zip(reference) {
                    if t <= 0.0 {
                        return Ok(inf);
                    }
                    acc += (t / z).max(z / t);
                }
                acc
            }
        })
    }

    /// Whether `y` lies in the relative interior of the domain.
    pub fn in_relative_interior(&self, y: &[f64]) -> bool {
        self.in_relative_interior_tol(y, 1e-9)
    }

    /// As [`SimpleFn::in_relative_interior`] with equality constraints
    /// checked to `eq_tol`.
    pub fn in_relative_interior_tol(&self, y: &[f64], eq_tol: f64) -> bool {
        if y.len() != self.dimension {
            return false;
        }
        match &self.kind {
            SimpleKind::Simplex { radius } => {
                y.iter().all(|v| *v > 0.0) && (y.iter().sum::<f64>() - radius).abs() <= eq_tol * radius.max(1.0)
            }
            SimpleKind::Box { lo, hi } => y
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| if l == h { (v - l).abs() <= eq_tol } else { v > l && v < h }),
            SimpleKind::Ball { center, radius, norm } => norm.norm(y.iter().zip(center).map(|(a, b)| a - b)) < *radius,
            SimpleKind::Hyperplane { .. } => self.value(y, eq_tol).map(|v| v == 0.0).unwrap_or(false),
            SimpleKind::NegEntropy { .. } | SimpleKind::QuotientQ1 { .. } => y.iter().all(|v| *v > 0.0),
            SimpleKind::SqDistance { .. } => y.iter().all(|v| v.is_finite()),
        }
    }
}

/// `prox_{gamma f}(y)`; a projection for indicators.
pub fn prox_simple(f: &SimpleFn, gamma: f64, y: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; y.len()];
    prox_simple_into(f, gamma, y, &mut out)?;
    Ok(out)
}

/// In-place form of [`prox_simple`].
pub fn prox_simple_into(f: &SimpleFn, gamma: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
    check_len("simple prox argument", f.dimension, y.len())?;
    check_len("simple prox output", f.dimension, out.len())?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma must be positive and finite, got {gamma}")));
    }
    match &f.kind {
        SimpleKind::Simplex { radius } => project_simplex(y, *radius, out),
        SimpleKind::Box { lo, hi } => {
            for i in 0..y.len() {
                out[i] = y[i].clamp(lo[i], hi[i]);
            }
        }
        SimpleKind::Ball { center, radius, norm } => project_ball(y, center, *radius, *norm, out),
        SimpleKind::Hyperplane { normal, offset } => {
            let dot: f64 = y.iter().zip(normal).map(|(a, b)| a * b).sum();
            let nn: f64 = normal.iter().map(|a| a * a).sum();
            let c = (dot - offset) / nn;
            for i in 0..y.len() {
                out[i] = y[i] - c * normal[i];
            }
        }
        SimpleKind::NegEntropy { weight } => {
            let mu = gamma * weight;
            let lmu = mu.ln();
            map_coords(y, out, |_, v| entropy_prox(v, mu, lmu));
        }
        SimpleKind::SqDistance { center } => {
            for i in 0..y.len() {
                out[i] = (y[i] + 2.0 * gamma * center[i]) / (1.0 + 2.0 * gamma);
            }
        }
        SimpleKind::QuotientQ1 { reference } => map_coords(y, out, |i, v| quotient_prox(v, reference[i], gamma)),
    }
    Ok(())
}

fn map_coords(y: &[f64], out: &mut [f64], f: impl Fn(usize, f64) -> f64 + Sync) {
    if y.len() >= PARALLEL_THRESHOLD {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i, y[i]));
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i, y[i]);
        }
    }
}

/// `prox_{mu t ln t}(v) = mu W(e^{v/mu - 1} / mu)`.
fn entropy_prox(v: f64, mu: f64, ln_mu: f64) -> f64 {
    mu * lambert_w_of_exp(v / mu - 1.0 - ln_mu)
}

/// Prox of `gamma max(t / z, z / t)` at `v`.
fn quotient_prox(v: f64, z: f64, gamma: f64) -> f64 {
    let s = gamma / z;
    if v > z + s {
        return v - s;
    }
    if v >= z - s {
        return z;
    }
    // Root in (0, z) of g(t) = t - v - gamma z / t^2, increasing in t.
    let g = |t: f64| t - v - gamma * z / (t * t);
    let dg = |t: f64| 1.0 + 2.0 * gamma * z / (t * t * t);
    let (mut lo, mut hi) = (0.0f64, z);
    let mut t = 0.5 * z;
    for _ in 0..200 {
        let f = g(t);
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let cand = t - f / dg(t);
        let next = if cand > lo && cand < hi { cand } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 1e-16 * t {
            t = next;
            break;
        }
        t = next;
    }
    t
}

/// Asymmetric soft threshold `max(x - gamma, 0)`.
pub fn soft_threshold_positive(x: f64, gamma: f64) -> f64 {
    (x - gamma).max(0.0)
}

fn project_simplex(y: &[f64], radius: f64, out: &mut [f64]) {
    let mut sorted: Vec<f64> = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - radius) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    for (o, &v) in out.iter_mut().zip(y) {
        *o = (v - theta).max(0.0);
    }
}

fn project_ball(y: &[f64], center: &[f64], radius: f64, norm: BallNorm, out: &mut [f64]) {
    let w: Vec<f64> = y.iter().zip(center).map(|(a, b)| a - b).collect();
    let n = norm.norm(w.iter().copied());
    if n <= radius {
        out.copy_from_slice(y);
        return;
    }
    match norm {
        BallNorm::L2 => {
            let c = radius / n;
            for i in 0..y.len() {
                out[i] = center[i] + c * w[i];
            }
        }
        BallNorm::LInf => {
            for i in 0..y.len() {
                out[i] = y[i].clamp(center[i] - radius, center[i] + radius);
            }
        }
        BallNorm::L1 => {
            let a: Vec<f64> = w.iter().map(|v| v.abs()).collect();
            let mut p = vec![0.0; a.len()];
            project_simplex(&a, radius, &mut p);
            for i in 0..y.len() {
                out[i] = center[i] + w[i].signum() * p[i];
            }
        }
    }
}
