//! Problem files: a problem statement plus optional solver settings.
//!
//! ```json
//! {
//!   "divergence": {"kind": "kl"},
//!   "A": {"shape": [2, 2], "data": [1, 0, 0, 1]},
//!   "B": {"identity": 2},
//!   "u": [1, 1], "v": [1, 1],
//!   "terms": [{"T": {"identity": 2}, "fn": {"type": "simplex", "dimension": 2, "radius": 1}}],
//!   "solver": {"name": "mlfbf", "stop_tol": 1e-7}
//! }
//! ```
//!
//! `variables` may be given explicitly; otherwise it is the column count of
//! the first operator. The divergence block (`divergence`, `A`, `B`, `u`,
//! `v`) is all-or-nothing.

use divprox::linop::LinearOp;
use divprox::scalar::DivergenceSpec;
use divprox::solvers::{DivergenceTerm, ProblemSpec, SolverConfig, SolverKind, Term};
use divprox::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceSpec>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<LinearOp>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<LinearOp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default)]
    pub terms: Vec<Term>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
}

/// `{"name": ..., <SolverConfig fields>}`; unknown fields are rejected.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<SolverKind>,
    #[serde(flatten)]
    pub config: SolverConfig,
}

impl<'de> Deserialize<'de> for SolverSection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut map = serde_json::Map::<String, serde_json::Value>::deserialize(d)?;
        let name = match map.remove("name") {
            Some(v) => Some(serde_json::from_value(v).map_err(D::Error::custom)?),
            None => None,
        };
        let config = serde_json::from_value(serde_json::Value::Object(map)).map_err(D::Error::custom)?;
        Ok(SolverSection { name, config })
    }
}

impl ProblemFile {
    pub fn from_spec(spec: &ProblemSpec, solver: Option<SolverSection>) -> Self {
        let d = spec.divergence();
        ProblemFile {
            variables: Some(spec.variables()),
            divergence: d.map(|d| d.spec),
            a: d.map(|d| d.a.clone()),
            b: d.map(|d| d.b.clone()),
            u: d.map(|d| d.u.clone()),
            v: d.map(|d| d.v.clone()),
            terms: spec.terms().to_vec(),
            solver,
        }
    }

    pub fn to_spec(&self) -> Result<ProblemSpec, Error> {
        let divergence = match (&self.divergence, &self.a, &self.b, &self.u, &self.v) {
            (None, None, None, None, None) => None,
            (Some(spec), Some(a), Some(b), Some(u), Some(v)) => {
                Some(DivergenceTerm { spec: *spec, a: a.clone(), b: b.clone(), u: u.clone(), v: v.clone() })
            }
            _ => return Err(Error::Schema("divergence, A, B, u and v must be given together".into())),
        };
        let variables = self
            .variables
            .or_else(|| self.a.as_ref().map(LinearOp::cols))
            .or_else(|| self.terms.first().map(|t| t.t.cols()))
            .ok_or_else(|| Error::Schema("cannot infer the number of variables".into()))?;
        ProblemSpec::new(variables, divergence, self.terms.clone())
    }
}
