//! Joint proximity operator of a perspective divergence on one pair.
//!
//! On the positive branch the prox is `(u - gamma theta_minus(z), xi -
//! gamma theta_plus(z))` where `z` is the unique root of the increasing
//! function `psi'` inside `(chi_minus, chi_plus)`. Elsewhere the prox lands
//! on the boundary of the domain.

use serde::Serialize;

use super::divergence::{DivergenceKind, DivergenceSpec};
use super::lambert::lambert_w_of_exp;
use crate::error::{invalid, Error, Result};

/// Lower clamp applied to the inner root.
pub const ZETA_MIN: f64 = 1e-300;
/// Upper clamp applied to the inner root.
pub const ZETA_MAX: f64 = 1e300;
/// Margin under which the positive-branch test is treated as a tie and the
/// boundary branch is taken.
pub const BRANCH_TIE_TOL: f64 = 1e-14;

/// A point `(u, xi)` and step `gamma` at which to evaluate the prox.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarProxQuery {
    pub gamma: f64,
    pub u: f64,
    pub xi: f64,
}

impl ScalarProxQuery {
    pub fn new(gamma: f64, u: f64, xi: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("gamma must be positive and finite, got {gamma}")));
        }
        if !u.is_finite() || !xi.is_finite() {
            return Err(invalid(format!("query point must be finite, got ({u}, {xi})")));
        }
        Ok(Self { gamma, u, xi })
    }
}

/// Output of a scalar prox.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxPair {
    pub u: f64,
    pub xi: f64,
}

/// Bracket `(chi_minus, chi_plus)` of the inner root. `chi_minus` may be 0
/// or `+inf` (empty lower set), `chi_plus` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiBounds {
    pub minus: f64,
    pub plus: f64,
}

/// Diagnostics of one inner root solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerSolveTrace {
    pub zeta_hat: f64,
    pub chi_minus: f64,
    pub chi_plus: f64,
    pub iterations: usize,
    /// `|psi'(zeta_hat)|`.
    pub residual: f64,
    /// `psi''(zeta_hat)`.
    pub curvature: f64,
    /// True when the root fell outside `[ZETA_MIN, ZETA_MAX]`.
    pub clamped: bool,
}

/// Stopping rule of the safeguarded Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iterations: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_iterations: 200 }
    }
}

/// The query after folding the `kappa` shift into it, in scaled form.
#[derive(Debug, Clone, Copy)]
struct Reduced<'a> {
    spec: &'a DivergenceSpec,
    gamma: f64,
    u: f64,
    xi: f64,
    a: f64,
    b: f64,
}

impl<'a> Reduced<'a> {
    fn new(spec: &'a DivergenceSpec, q: &ScalarProxQuery) -> Self {
        let (cu, cx) = spec.linear_shift();
        let u = q.u - q.gamma * cu;
        let xi = q.xi - q.gamma * cx;
        Self { spec, gamma: q.gamma, u, xi, a: u / q.gamma, b: xi / q.gamma }
    }

    fn alpha(&self) -> f64 {
        self.spec.alpha().unwrap_or(0.0)
    }

    /// `(ln chi_minus, ln chi_plus)`, with `-inf` for 0 and `+inf` for an
    /// empty lower set or an unbounded upper one.
    fn ln_chi(&self) -> (f64, f64) {
        let (a, b) = (self.a, self.b);
        let inf = f64::INFINITY;
        match self.spec.kind() {
            DivergenceKind::Kl => (-a, if b < 1.0 { -(-b).ln_1p() } else { inf }),
            DivergenceKind::Jeffreys => {
                let ta = 1.0 - a;
                let tb = 1.0 - b;
                (ta - lambert_w_of_exp(ta), -(tb - lambert_w_of_exp(tb)))
            }
            DivergenceKind::Hellinger => (
                if a < 1.0 { 2.0 * (-a).ln_1p() } else { -inf },
                if b < 1.0 { -2.0 * (-b).ln_1p() } else { inf },
            ),
            DivergenceKind::ChiSquare => (
                if a > -2.0 { -(0.5 * a).ln_1p() } else { inf },
                if b < 1.0 { -0.5 * (-b).ln_1p() } else { inf },
            ),
            DivergenceKind::Renyi => {
                let al = self.alpha();
                (
                    if a > 0.0 { (al.ln() - a.ln()) / (al - 1.0) } else { inf },
                    if b < 0.0 { ((al - 1.0).ln() - (-b).ln()) / al } else { inf },
                )
            }
            DivergenceKind::IAlpha => {
                let al = self.alpha();
                (
                    if a < al { (-a / al).ln_1p() / (1.0 - al) } else { -inf },
                    if b < 1.0 - al { -(-b / (1.0 - al)).ln_1p() / al } else { inf },
                )
            }
        }
    }

    /// Signed margin of the positive-branch condition, `+inf` when it holds
    /// unconditionally and `-inf` when it cannot hold.
    fn branch_margin(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        let inf = f64::INFINITY;
        match self.spec.kind() {
            DivergenceKind::Kl => {
                if b >= 1.0 {
                    inf
                } else {
                    a - (-b).ln_1p()
                }
            }
            DivergenceKind::Jeffreys => {
                // ln chi_plus - ln chi_minus, using ln W(e^t) = t - W(e^t).
                let wa = lambert_w_of_exp(1.0 - a);
                let wb = lambert_w_of_exp(1.0 - b);
                (wa - (1.0 - a)) + (wb - (1.0 - b))
            }
            DivergenceKind::Hellinger => {
                if a >= 1.0 || b >= 1.0 {
                    inf
                } else {
                    -((-a).ln_1p() + (-b).ln_1p())
                }
            }
            DivergenceKind::ChiSquare => {
                if a <= -2.0 {
                    -inf
                } else if b >= 1.0 {
                    inf
                } else {
                    2.0 * (0.5 * a).ln_1p() - (-b).ln_1p()
                }
            }
            DivergenceKind::Renyi => {
                let al = self.alpha();
                if a <= 0.0 {
                    -inf
                } else if b >= 0.0 {
                    inf
                } else {
                    al / (al - 1.0) * (a / al).ln() - (b / (1.0 - al)).ln()
                }
            }
            DivergenceKind::IAlpha => {
                let al = self.alpha();
                if a >= al || b >= 1.0 - al {
                    inf
                } else {
                    al / (al - 1.0) * (-a / al).ln_1p() - (-b / (1.0 - al)).ln_1p()
                }
            }
        }
    }

    fn positive(&self) -> bool {
        self.branch_margin() > BRANCH_TIE_TOL
    }

    /// `(psi'(z), psi''(z))` in closed forms that stay finite near 0 and inf.
    fn psi12(&self, z: f64) -> (f64, f64) {
        let (a, b) = (self.a, self.b);
        let (tm, tp) = self.spec.theta_pair0(z);
        let d1 = z * (a - tm) + tp - b;
        let lz = z.ln();
        let al = self.alpha();
        let d2 = match self.spec.kind() {
            DivergenceKind::Kl => a + lz + 1.0 + 1.0 / (z * z),
            DivergenceKind::Jeffreys => a + lz + 2.0 * z + 1.0 / z + 1.0 / (z * z),
            DivergenceKind::Hellinger => a - 1.0 + 1.5 * z.sqrt() + 0.5 * (-1.5 * lz).exp(),
            DivergenceKind::ChiSquare => a + 2.0 + 2.0 / (z * z * z),
            DivergenceKind::Renyi => {
                let p = ((1.0 - al) * lz).exp();
                let q = ((-1.0 - al) * lz).exp();
                a - al * p + al * (al - 1.0) * (p + q)
            }
            DivergenceKind::IAlpha => {
                let p = ((1.0 - al) * lz).exp();
                let q = ((-1.0 - al) * lz).exp();
                a - al * (1.0 - p) + al * (1.0 - al) * (p + q)
            }
        };
        (d1, d2)
    }

    fn psi(&self, z: f64) -> f64 {
        let (a, b) = (self.a, self.b);
        let al = self.alpha();
        let lz = z.ln();
        let (persp, big_theta) = match self.spec.kind() {
            DivergenceKind::Kl => (-lz - 1.0 + z, 0.5 * z * z * (0.5 - lz) - 1.0),
            DivergenceKind::Jeffreys => ((z - 1.0) * lz, z * z * (0.75 - z / 3.0 - 0.5 * lz)),
            DivergenceKind::Hellinger => (z + 1.0 - 2.0 * z.sqrt(), 0.5 * z * z - 0.4 * z.powf(2.5) + 1.0),
            DivergenceKind::ChiSquare => ((1.0 - z) * (1.0 - z) / z, 2.0 * z - z * z),
            DivergenceKind::Renyi => {
                let th = if (al - 3.0).abs() < 1e-15 { al * lz } else { al / (3.0 - al) * z.powf(3.0 - al) };
                (z.powf(1.0 - al), th)
            }
            DivergenceKind::IAlpha => (
                z * (1.0 - al) + al - z.powf(1.0 - al),
                al * (0.5 * z * z - z.powf(3.0 - al) / (3.0 - al)),
            ),
        };
        persp - big_theta + 0.5 * a * z * z - b * z
    }

    fn boundary(&self) -> ProxPair {
        match self.spec.kind() {
            DivergenceKind::ChiSquare => ProxPair { u: 0.0, xi: (self.xi - self.gamma).max(0.0) },
            DivergenceKind::Renyi => ProxPair { u: 0.0, xi: self.xi.max(0.0) },
            _ => ProxPair { u: 0.0, xi: 0.0 },
        }
    }

    fn assemble(&self, z: f64) -> ProxPair {
        let (tm, tp) = self.spec.theta_pair0(z);
        // The output satisfies xi = z u. The smaller coordinate is taken
        // from that ratio; its direct formula cancels badly for extreme z.
        if z >= 1.0 {
            let xi = (self.xi - self.gamma * tp).max(f64::MIN_POSITIVE);
            ProxPair { u: (xi / z).max(f64::MIN_POSITIVE), xi }
        } else {
            let u = (self.u - self.gamma * tm).max(f64::MIN_POSITIVE);
            ProxPair { u, xi: (u * z).max(f64::MIN_POSITIVE) }
        }
    }
}

fn exp_or_inf(l: f64) -> f64 {
    if l == f64::INFINITY {
        f64::INFINITY
    } else {
        l.exp()
    }
}

/// Bracket of the inner root for `spec` at `q`.
pub fn chi_bounds(spec: &DivergenceSpec, q: &ScalarProxQuery) -> ChiBounds {
    let (lm, lp) = Reduced::new(spec, q).ln_chi();
    ChiBounds { minus: exp_or_inf(lm), plus: exp_or_inf(lp) }
}

/// `(psi'(zeta), psi''(zeta))` for `zeta > 0`.
pub fn psi_derivatives(spec: &DivergenceSpec, q: &ScalarProxQuery, zeta: f64) -> (f64, f64) {
    Reduced::new(spec, q).psi12(zeta)
}

/// `psi(zeta)` up to an additive constant.
pub fn psi_value(spec: &DivergenceSpec, q: &ScalarProxQuery, zeta: f64) -> f64 {
    Reduced::new(spec, q).psi(zeta)
}

/// Whether the prox lies in the open positive quadrant.
pub fn positive_branch(spec: &DivergenceSpec, q: &ScalarProxQuery) -> bool {
    Reduced::new(spec, q).positive()
}

/// Solves `psi'(zeta) = 0` on `(chi_minus, chi_plus)` with default settings.
pub fn solve_inner(spec: &DivergenceSpec, q: &ScalarProxQuery) -> Result<InnerSolveTrace> {
    solve_inner_with(spec, q, &InnerConfig::default())
}

/// Solves `psi'(zeta) = 0` by Newton's method safeguarded with bisection.
///
/// Errors with `InvalidParameter` off the positive branch and with
/// `SolverFailure` when the iteration cap is hit.
pub fn solve_inner_with(spec: &DivergenceSpec, q: &ScalarProxQuery, cfg: &InnerConfig) -> Result<InnerSolveTrace> {
    let r = Reduced::new(spec, q);
    if !r.positive() {
        return Err(invalid("positive-branch condition does not hold; no interior root"));
    }
    solve_reduced(&r, cfg)
}

fn solve_reduced(r: &Reduced, cfg: &InnerConfig) -> Result<InnerSolveTrace> {
    let (lm, lp) = r.ln_chi();
    let chi_minus = exp_or_inf(lm);
    let chi_plus = exp_or_inf(lp);
    let finish = |z: f64, iterations: usize, clamped: bool| {
        let mut z = z;
        if !clamped {
            if chi_minus > 0.0 && z <= chi_minus {
                z = chi_minus.next_up();
            }
            if z >= chi_plus {
                z = chi_plus.next_down();
            }
        }
        let z = z.clamp(ZETA_MIN, ZETA_MAX);
        let (f, d) = r.psi12(z);
        InnerSolveTrace {
            zeta_hat: z,
            chi_minus,
            chi_plus,
            iterations,
            residual: f.abs(),
            curvature: d,
            clamped,
        }
    };

    if r.spec.kind() == DivergenceKind::Kl && r.b == 1.0 {
        // psi' = 0 reduces to z^2 (a + ln z) = 1.
        let z = (2.0 / lambert_w_of_exp(std::f64::consts::LN_2 + 2.0 * r.a)).sqrt();
        if z.is_finite() && z >= ZETA_MIN && z <= ZETA_MAX {
            return Ok(finish(z, 0, false));
        }
    }

    let mut lo = chi_minus.max(ZETA_MIN);
    if lo >= ZETA_MAX {
        return Ok(finish(ZETA_MAX, 0, true));
    }
    if lo == ZETA_MIN && r.psi12(lo).0 >= 0.0 {
        return Ok(finish(ZETA_MIN, 0, true));
    }
    let mut hi = if chi_plus <= ZETA_MAX {
        chi_plus
    } else {
        let mut h = (2.0 * lo).max(1.0).min(ZETA_MAX);
        loop {
            let f = r.psi12(h).0;
            if f > 0.0 || f.is_nan() {
                break h;
            }
            lo = h;
            if h >= ZETA_MAX {
                return Ok(finish(ZETA_MAX, 0, true));
            }
            h = (4.0 * h).min(ZETA_MAX);
        }
    };
    if hi <= lo {
        return Ok(finish(lo, 0, false));
    }

    let bisect = |lo: f64, hi: f64| {
        if hi > 4.0 * lo {
            lo.sqrt() * hi.sqrt()
        } else {
            0.5 * (lo + hi)
        }
    };
    let mut z = if r.spec.kind() == DivergenceKind::Kl { lo } else { bisect(lo, hi) };
    let mut prev_abs = f64::INFINITY;
    let mut last_newton = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let (f, d) = r.psi12(z);
        if f.abs() <= cfg.abs_tol + cfg.rel_tol * (d * z).abs() {
            return Ok(finish(z, iterations, false));
        }
        if f < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        if hi <= lo.next_up() {
            return Ok(finish(z, iterations, false));
        }
        let newton_ok = f.is_finite() && d.is_finite() && d > 0.0 && !(last_newton && f.abs() > 0.5 * prev_abs);
        let cand = z - f / d;
        prev_abs = f.abs();
        if newton_ok && cand > lo && cand < hi {
            z = cand;
            last_newton = true;
        } else {
            z = bisect(lo, hi);
            last_newton = false;
        }
    }
    let (f, d) = r.psi12(z);
    if f.abs() <= cfg.abs_tol + cfg.rel_tol * (d * z).abs() {
        return Ok(finish(z, iterations, false));
    }
    Err(Error::SolverFailure { trace: finish(z, iterations, false) })
}

/// Joint prox of `gamma * Phi` at `(q.u, q.xi)`.
pub fn prox_divergence(spec: &DivergenceSpec, q: &ScalarProxQuery) -> Result<ProxPair> {
    prox_divergence_traced(spec, q).map(|(p, _)| p)
}

/// As [`prox_divergence`], also returning the inner solve on the positive
/// branch.
pub fn prox_divergence_traced(
    spec: &DivergenceSpec,
    q: &ScalarProxQuery,
) -> Result<(ProxPair, Option<InnerSolveTrace>)> {
    let r = Reduced::new(spec, q);
    if !r.positive() {
        return Ok((r.boundary(), None));
    }
    let trace = solve_reduced(&r, &InnerConfig::default())?;
    Ok((r.assemble(trace.zeta_hat), Some(trace)))
}

/// Plain Newton iterates on `psi'` for a KL-type divergence started at
/// `chi_minus`, without safeguards. Stops once
/// `|psi'| <= tol * max(1, |psi'' zeta|)` or the iterate stops moving.
pub fn kl_newton_iterates(spec: &DivergenceSpec, q: &ScalarProxQuery, tol: f64, max_iterations: usize) -> Result<Vec<f64>> {
    if spec.kind() != DivergenceKind::Kl {
        return Err(invalid("kl_newton_iterates requires a KL divergence"));
    }
    let r = Reduced::new(spec, q);
    if !r.positive() {
        return Err(invalid("positive-branch condition does not hold; no interior root"));
    }
    let mut z = exp_or_inf(r.ln_chi().0);
    let mut out = vec![z];
    for _ in 0..max_iterations {
        let (f, d) = r.psi12(z);
        if f.abs() <= tol * (d * z).abs().max(1.0) {
            break;
        }
        let next = z - f / d;
        if next == z {
            break;
        }
        z = next;
        out.push(z);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use divprox_oracle::{finite_difference, grid_prox_oracle, GridOracleConfig};
    use proptest::prelude::*;

    const OMEGA: f64 = 0.567_143_290_409_783_8;

    fn spec(kind: DivergenceKind) -> DivergenceSpec {
        match kind {
            DivergenceKind::Renyi => DivergenceSpec::new(kind, Some(2.0), None).unwrap(),
            DivergenceKind::IAlpha => DivergenceSpec::new(kind, Some(0.5), None).unwrap(),
            _ => DivergenceSpec::simple(kind).unwrap(),
        }
    }

    fn q(gamma: f64, u: f64, xi: f64) -> ScalarProxQuery {
        ScalarProxQuery::new(gamma, u, xi).unwrap()
    }

    #[test]
    fn query_validation() {
        assert!(ScalarProxQuery::new(0.0, 1.0, 1.0).is_err());
        assert!(ScalarProxQuery::new(1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn chi_bound_examples() {
        let b = chi_bounds(&spec(DivergenceKind::Kl), &q(1.0, 0.0, 0.0));
        assert!((b.minus - 1.0).abs() < 1e-15);
        assert!((b.plus - 1.0).abs() < 1e-15);
        let b = chi_bounds(&spec(DivergenceKind::Hellinger), &q(1.0, 0.5, 0.5));
        assert!((b.minus - 0.25).abs() < 1e-15 && (b.plus - 4.0).abs() < 1e-14);
        let b = chi_bounds(&spec(DivergenceKind::Jeffreys), &q(1.0, 0.0, 0.0));
        assert!((b.minus - 1.0).abs() < 1e-15 && (b.plus - 1.0).abs() < 1e-15);
        let b = chi_bounds(&spec(DivergenceKind::Jeffreys), &q(1.0, 1.0, 1.0));
        assert!((b.minus - OMEGA).abs() < 1e-15 && (b.plus - 1.0 / OMEGA).abs() < 1e-14);
        let b = chi_bounds(&spec(DivergenceKind::ChiSquare), &q(1.0, -3.0, 0.0));
        assert_eq!(b.minus, f64::INFINITY);
        let b = chi_bounds(&spec(DivergenceKind::Kl), &q(1.0, 0.0, 2.0));
        assert_eq!(b.plus, f64::INFINITY);
    }

    #[test]
    fn psi_derivative_examples() {
        let (d1, _) = psi_derivatives(&spec(DivergenceKind::Kl), &q(1.0, 1.0, 0.0), 1.0);
        assert!((d1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        let cases = [
            (DivergenceKind::Kl, q(1.0, 0.3, 0.7)),
            (DivergenceKind::Jeffreys, q(0.5, 1.1, -0.2)),
            (DivergenceKind::Hellinger, q(2.0, 0.5, 1.5)),
            (DivergenceKind::ChiSquare, q(1.0, 0.4, -0.5)),
            (DivergenceKind::Renyi, q(1.0, 0.8, -0.3)),
            (DivergenceKind::IAlpha, q(1.0, 0.2, 0.1)),
        ];
        let mut specs: Vec<(DivergenceSpec, ScalarProxQuery)> = cases.iter().map(|(k, qq)| (spec(*k), *qq)).collect();
        specs.push((DivergenceSpec::new(DivergenceKind::Renyi, Some(3.0), None).unwrap(), q(1.0, 0.8, -0.3)));
        specs.push((DivergenceSpec::new(DivergenceKind::IAlpha, Some(0.3), Some(0.5)).unwrap(), q(1.0, 0.2, 0.1)));
        for (s, qq) in specs {
            for &z in &[0.2, 0.9, 1.7, 4.0] {
                let (d1, d2) = psi_derivatives(&s, &qq, z);
                let fd1 = finite_difference(|t| psi_value(&s, &qq, t), z);
                let fd2 = finite_difference(|t| psi_derivatives(&s, &qq, t).0, z);
                assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()), "{s} z={z}: {d1} vs {fd1}");
                assert!((d2 - fd2).abs() < 1e-6 * (1.0 + d2.abs()), "{s} z={z}: {d2} vs {fd2}");
            }
        }
    }

    #[test]
    fn branch_examples() {
        assert!(positive_branch(&spec(DivergenceKind::Kl), &q(1.0, 1.0, 1.0)));
        assert!(!positive_branch(&spec(DivergenceKind::Jeffreys), &q(1.0, 0.0, 0.0)));
        assert!(!positive_branch(&spec(DivergenceKind::ChiSquare), &q(1.0, -3.0, 5.0)));
        assert!(!positive_branch(&spec(DivergenceKind::Renyi), &q(1.0, -1.0, 5.0)));
        assert!(!positive_branch(&spec(DivergenceKind::Kl), &q(1.0, -10.0, 0.5)));
        assert!(positive_branch(&spec(DivergenceKind::Hellinger), &q(1.0, 1.0, -50.0)));
    }

    #[test]
    fn boundary_outputs() {
        let p = prox_divergence(&spec(DivergenceKind::ChiSquare), &q(1.0, -3.0, 5.0)).unwrap();
        assert_eq!(p, ProxPair { u: 0.0, xi: 4.0 });
        let p = prox_divergence(&spec(DivergenceKind::Renyi), &q(1.0, -1.0, 5.0)).unwrap();
        assert_eq!(p, ProxPair { u: 0.0, xi: 5.0 });
        let p = prox_divergence(&spec(DivergenceKind::Kl), &q(1.0, -10.0, 0.5)).unwrap();
        assert_eq!(p, ProxPair { u: 0.0, xi: 0.0 });
        let p = prox_divergence(&spec(DivergenceKind::Jeffreys), &q(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(p, ProxPair { u: 0.0, xi: 0.0 });
    }

    #[test]
    fn diagonal_fixed_points() {
        // Phi vanishes with zero gradient on the diagonal for every generator
        // with phi(1) = phi'(1) = 0.
        for kind in [DivergenceKind::Kl, DivergenceKind::Jeffreys, DivergenceKind::Hellinger, DivergenceKind::ChiSquare, DivergenceKind::IAlpha] {
            for &t in &[0.1, 1.0, 7.5] {
                let p = prox_divergence(&spec(kind), &q(1.3, t, t)).unwrap();
                assert!((p.u - t).abs() < 1e-9 * t && (p.xi - t).abs() < 1e-9 * t, "{kind}: {p:?}");
            }
        }
    }

    #[test]
    fn kl_closed_form_special_case() {
        // Frozen against the 2-D grid oracle.
        let s = spec(DivergenceKind::Kl);
        let qq = q(1.0, 0.7, 1.0);
        let tr = solve_inner(&s, &qq).unwrap();
        assert_eq!(tr.iterations, 0);
        assert!(tr.residual < 1e-12);
        let p = prox_divergence(&s, &qq).unwrap();
        let o = grid_prox_oracle(
            |x, y| s.perspective_value(x, y) + 0.5 * ((x - 0.7).powi(2) + (y - 1.0).powi(2)),
            [0.0, 0.0],
            [3.0, 3.0],
            GridOracleConfig { coarse_step: 0.01, ..Default::default() },
        );
        assert!((p.u - o[0]).abs() < 1e-6 && (p.xi - o[1]).abs() < 1e-6, "{p:?} vs {o:?}");
    }

    #[test]
    fn extreme_queries_do_not_overflow() {
        let s = spec(DivergenceKind::Kl);
        let p = prox_divergence(&s, &q(1.0, -700.0, 800.0)).unwrap();
        assert!(p.u > 0.0 && p.u.is_finite());
        assert!((p.xi - 799.0).abs() < 1e-9);
        let p = prox_divergence(&s, &q(0.1, 60.0, -1e6)).unwrap();
        assert!(p.u.is_finite() && p.xi.is_finite());
        let r = spec(DivergenceKind::Renyi);
        let p = prox_divergence(&r, &q(1.0, 1e-290, -1.0)).unwrap();
        assert!(p.u.is_finite() && p.xi.is_finite());
    }

    #[test]
    fn kappa_shift_matches_translated_query() {
        let k = 0.3;
        let s = DivergenceSpec::new(DivergenceKind::Kl, None, Some(k)).unwrap();
        let g = 0.8;
        let p = prox_divergence(&s, &q(g, 0.4, 1.2)).unwrap();
        let p0 = prox_divergence(&spec(DivergenceKind::Kl), &q(g, 0.4 + g * k - g, 1.2 - g * k + g)).unwrap();
        assert!((p.u - p0.u).abs() < 1e-14 && (p.xi - p0.xi).abs() < 1e-14);
    }

    #[test]
    fn failure_carries_trace() {
        let s = spec(DivergenceKind::Jeffreys);
        let cfg = InnerConfig { abs_tol: 0.0, rel_tol: 0.0, max_iterations: 1 };
        match solve_inner_with(&s, &q(1.0, 1.0, 1.0), &cfg) {
            Err(Error::SolverFailure { trace }) => assert_eq!(trace.iterations, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn kl_newton_is_monotone_after_one_switch(g in 0.1f64..10.0, u in -3.0f64..3.0, x in -3.0f64..3.0) {
            let s = spec(DivergenceKind::Kl);
            let qq = q(g, u, x);
            prop_assume!(positive_branch(&s, &qq));
            let it = kl_newton_iterates(&s, &qq, 1e-13, 200).unwrap();
            let root = solve_inner(&s, &qq).unwrap().zeta_hat;
            prop_assert!(it.len() < 200);
            // Increasing while below the root; at most one jump above it,
            // then non-increasing.
            let mut above = false;
            for w in it.windows(2) {
                if !above {
                    if w[1] > root * (1.0 + 1e-12) {
                        above = true;
                    } else {
                        prop_assert!(w[1] >= w[0] * (1.0 - 1e-12));
                    }
                } else {
                    prop_assert!(w[1] <= w[0] * (1.0 + 1e-13));
                }
            }
        }

        #[test]
        fn root_sits_inside_bracket(g in 0.05f64..20.0, u in -5.0f64..5.0, x in -5.0f64..5.0, k in 0usize..6) {
            let s = spec(DivergenceKind::ALL[k]);
            let qq = q(g, u, x);
            prop_assume!(positive_branch(&s, &qq));
            let tr = solve_inner(&s, &qq).unwrap();
            prop_assert!(tr.zeta_hat > tr.chi_minus && tr.zeta_hat < tr.chi_plus);
            prop_assert!(tr.residual <= 1e-12 + 1e-12 * (tr.curvature * tr.zeta_hat).abs());
            let p = prox_divergence(&s, &qq).unwrap();
            prop_assert!(p.u > 0.0 && p.xi > 0.0);
        }
    }
}
