//! The divergence catalog: generators, perspectives and their derivatives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Which generator `phi` defines the divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceKind {
    /// `phi(z) = z ln z - z + 1`.
    Kl,
    /// `phi(z) = (z - 1) ln z`.
    Jeffreys,
    /// `phi(z) = 1 + z - 2 sqrt(z)`.
    Hellinger,
    /// `phi(z) = (z - 1)^2`.
    ChiSquare,
    /// `phi(z) = z^alpha`, `alpha > 1`.
    Renyi,
    /// `phi(z) = 1 - alpha + alpha z - z^alpha`, `0 < alpha < 1`.
    IAlpha,
}

impl DivergenceKind {
    pub const ALL: [DivergenceKind; 6] = [
        DivergenceKind::Kl,
        DivergenceKind::Jeffreys,
        DivergenceKind::Hellinger,
        DivergenceKind::ChiSquare,
        DivergenceKind::Renyi,
        DivergenceKind::IAlpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DivergenceKind::Kl => "kl",
            DivergenceKind::Jeffreys => "jeffreys",
            DivergenceKind::Hellinger => "hellinger",
            DivergenceKind::ChiSquare => "chi-square",
            DivergenceKind::Renyi => "renyi",
            DivergenceKind::IAlpha => "i-alpha",
        }
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match norm.as_str() {
            "kl" | "kullback-leibler" => DivergenceKind::Kl,
            "jeffreys" | "jeffrey" => DivergenceKind::Jeffreys,
            "hellinger" => DivergenceKind::Hellinger,
            "chi-square" | "chi2" | "chisquare" => DivergenceKind::ChiSquare,
            "renyi" => DivergenceKind::Renyi,
            "i-alpha" | "ialpha" => DivergenceKind::IAlpha,
            _ => return Err(invalid(format!("unknown divergence kind '{s}'"))),
        })
    }
}

/// A validated divergence: kind plus optional order `alpha` and dual shift
/// `kappa`.
///
/// `kappa` is only meaningful for KL and I_alpha. It adds the linear term
/// that turns `Phi` into the conjugate-shifted variant, so that
/// `kappa = 1` is the plain divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDivergence", into = "RawDivergence")]
pub struct DivergenceSpec {
    kind: DivergenceKind,
    alpha: f64,
    kappa: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDivergence {
    kind: DivergenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
}

impl TryFrom<RawDivergence> for DivergenceSpec {
    type Error = Error;

    fn try_from(r: RawDivergence) -> Result<Self> {
        DivergenceSpec::new(r.kind, r.alpha, r.kappa)
    }
}

impl From<DivergenceSpec> for RawDivergence {
    fn from(d: DivergenceSpec) -> Self {
        RawDivergence { kind: d.kind, alpha: d.alpha(), kappa: d.kappa }
    }
}

impl DivergenceSpec {
    pub fn new(kind: DivergenceKind, alpha: Option<f64>, kappa: Option<f64>) -> Result<Self> {
        let alpha = match (kind, alpha) {
            (DivergenceKind::Renyi, Some(a)) if a > 1.0 && a.is_finite() => a,
            (DivergenceKind::Renyi, Some(a)) => {
                return Err(invalid(format!("renyi order must satisfy alpha > 1, got {a}")))
            }
            (DivergenceKind::IAlpha, Some(a)) if a > 0.0 && a < 1.0 => a,
            (DivergenceKind::IAlpha, Some(a)) => {
                return Err(invalid(format!("i-alpha order must satisfy 0 < alpha < 1, got {a}")))
            }
            (DivergenceKind::Renyi | DivergenceKind::IAlpha, None) => {
                return Err(invalid(format!("{kind} requires alpha")))
            }
            (_, Some(_)) => return Err(invalid(format!("{kind} takes no alpha"))),
            (_, None) => 0.0,
        };
        if let Some(k) = kappa {
            if !matches!(kind, DivergenceKind::Kl | DivergenceKind::IAlpha) {
                return Err(invalid(format!("{kind} takes no kappa")));
            }
            if !k.is_finite() {
                return Err(invalid(format!("kappa must be finite, got {k}")));
            }
        }
        Ok(Self { kind, alpha, kappa })
    }

    /// Plain divergence without order or shift.
    pub fn simple(kind: DivergenceKind) -> Result<Self> {
        Self::new(kind, None, None)
    }

    pub fn kl() -> Self {
        Self { kind: DivergenceKind::Kl, alpha: 0.0, kappa: None }
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    pub fn alpha(&self) -> Option<f64> {
        matches!(self.kind, DivergenceKind::Renyi | DivergenceKind::IAlpha).then_some(self.alpha)
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    /// Coefficients `(c_u, c_xi)` of the linear term `c_u u + c_xi xi` that
    /// the `kappa` variant adds to the plain perspective.
    pub fn linear_shift(&self) -> (f64, f64) {
        match (self.kind, self.kappa) {
            (DivergenceKind::Kl, Some(k)) => (1.0 - k, k - 1.0),
            (DivergenceKind::IAlpha, Some(k)) => ((k - 1.0) * self.alpha, (k - 1.0) * (1.0 - self.alpha)),
            _ => (0.0, 0.0),
        }
    }

    /// Generator of the plain divergence, `+inf` outside its domain.
    pub(crate) fn phi0(&self, z: f64) -> f64 {
        let a = self.alpha;
        match self.kind {
            DivergenceKind::Kl => {
                if z > 0.0 {
                    z * z.ln() - z + 1.0
                } else if z == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            DivergenceKind::Jeffreys => {
                if z > 0.0 {
                    (z - 1.0) * z.ln()
                } else {
                    f64::INFINITY
                }
            }
            DivergenceKind::Hellinger => {
                if z >= 0.0 {
                    1.0 + z - 2.0 * z.sqrt()
                } else {
                    f64::INFINITY
                }
            }
            DivergenceKind::ChiSquare => {
                if z >= 0.0 {
                    (z - 1.0) * (z - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            DivergenceKind::Renyi => {
                if z >= 0.0 {
                    z.powf(a)
                } else {
                    f64::INFINITY
                }
            }
            DivergenceKind::IAlpha => {
                if z >= 0.0 {
                    1.0 - a + a * z - z.powf(a)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `phi'` of the plain divergence on `(0, inf)`.
    #[cfg(test)]
    pub(crate) fn dphi0(&self, z: f64) -> f64 {
        let a = self.alpha;
        match self.kind {
            DivergenceKind::Kl => z.ln(),
            DivergenceKind::Jeffreys => z.ln() + 1.0 - 1.0 / z,
            DivergenceKind::Hellinger => 1.0 - 1.0 / z.sqrt(),
            DivergenceKind::ChiSquare => 2.0 * (z - 1.0),
            DivergenceKind::Renyi => a * z.powf(a - 1.0),
            DivergenceKind::IAlpha => a * (1.0 - z.powf(a - 1.0)),
        }
    }

    /// `phi''` of the plain divergence on `(0, inf)`.
    #[cfg(test)]
    pub(crate) fn d2phi0(&self, z: f64) -> f64 {
        let a = self.alpha;
        match self.kind {
            DivergenceKind::Kl => 1.0 / z,
            DivergenceKind::Jeffreys => 1.0 / z + 1.0 / (z * z),
            DivergenceKind::Hellinger => 0.5 * z.powf(-1.5),
            DivergenceKind::ChiSquare => 2.0,
            DivergenceKind::Renyi => a * (a - 1.0) * z.powf(a - 2.0),
            DivergenceKind::IAlpha => a * (1.0 - a) * z.powf(a - 2.0),
        }
    }

    /// Generator including the `kappa` shift.
    pub fn phi(&self, z: f64) -> f64 {
        let (cu, cx) = self.linear_shift();
        let v = self.phi0(z);
        if v.is_finite() {
            v + cu * z + cx
        } else {
            v
        }
    }

    /// `(theta_minus, theta_plus)` at `zeta > 0`, where
    /// `theta_minus = phi'(1/zeta)` and
    /// `theta_plus = phi(1/zeta) - phi'(1/zeta) / zeta`.
    pub fn theta_pair(&self, zeta: f64) -> (f64, f64) {
        let (tm, tp) = self.theta_pair0(zeta);
        let (cu, cx) = self.linear_shift();
        (tm + cu, tp + cx)
    }

    /// Closed forms of the plain theta pair, written to avoid cancellation.
    pub(crate) fn theta_pair0(&self, zeta: f64) -> (f64, f64) {
        let a = self.alpha;
        let lz = zeta.ln();
        match self.kind {
            DivergenceKind::Kl => (-lz, 1.0 - 1.0 / zeta),
            DivergenceKind::Jeffreys => (-lz + 1.0 - zeta, lz - 1.0 / zeta + 1.0),
            DivergenceKind::Hellinger => (1.0 - zeta.sqrt(), 1.0 - 1.0 / zeta.sqrt()),
            DivergenceKind::ChiSquare => (2.0 * (1.0 / zeta - 1.0), 1.0 - 1.0 / (zeta * zeta)),
            DivergenceKind::Renyi => (a * ((1.0 - a) * lz).exp(), (1.0 - a) * (-a * lz).exp()),
            DivergenceKind::IAlpha => {
                (a * (1.0 - ((1.0 - a) * lz).exp()), (1.0 - a) * (1.0 - (-a * lz).exp()))
            }
        }
    }

    /// Perspective `Phi(u, xi) = xi phi(u / xi)` with its boundary values,
    /// including the `kappa` term. Returns `+inf` outside the domain.
    pub fn perspective_value(&self, u: f64, xi: f64) -> f64 {
        if u.is_nan() || xi.is_nan() {
            return f64::NAN;
        }
        let base = self.perspective0(u, xi);
        if !base.is_finite() {
            return base;
        }
        let (cu, cx) = self.linear_shift();
        base + cu * u + cx * xi
    }

    fn perspective0(&self, u: f64, xi: f64) -> f64 {
        let inf = f64::INFINITY;
        if u < 0.0 || xi < 0.0 {
            return inf;
        }
        let a = self.alpha;
        match self.kind {
            DivergenceKind::Kl => {
                if u > 0.0 && xi > 0.0 {
                    u * (u.ln() - xi.ln()) + xi - u
                } else if u == 0.0 {
                    xi
                } else {
                    inf
                }
            }
            DivergenceKind::Jeffreys => {
                if u > 0.0 && xi > 0.0 {
                    (u - xi) * (u.ln() - xi.ln())
                } else if u == 0.0 && xi == 0.0 {
                    0.0
                } else {
                    inf
                }
            }
            DivergenceKind::Hellinger => {
                let d = u.sqrt() - xi.sqrt();
                d * d
            }
            DivergenceKind::ChiSquare => {
                if xi > 0.0 {
                    (u - xi) * (u - xi) / xi
                } else if u == 0.0 {
                    0.0
                } else {
                    inf
                }
            }
            DivergenceKind::Renyi => {
                if xi > 0.0 {
                    (a * u.ln() + (1.0 - a) * xi.ln()).exp()
                } else if u == 0.0 {
                    0.0
                } else {
                    inf
                }
            }
            DivergenceKind::IAlpha => {
                let cross = if u > 0.0 && xi > 0.0 { (a * u.ln() + (1.0 - a) * xi.ln()).exp() } else { 0.0 };
                a * u + (1.0 - a) * xi - cross
            }
        }
    }
}

impl fmt::Display for DivergenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(a) = self.alpha() {
            write!(f, "(alpha={a})")?;
        }
        if let Some(k) = self.kappa {
            write!(f, "[kappa={k}]")?;
        }
        Ok(())
    }
}
