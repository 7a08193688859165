//! Serde helpers for extended reals, written as numbers or `"inf"`/`"-inf"`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

fn to_repr(v: f64) -> NumOrStr {
    if v == f64::INFINITY {
        NumOrStr::Str("inf".into())
    } else if v == f64::NEG_INFINITY {
        NumOrStr::Str("-inf".into())
    } else {
        NumOrStr::Num(v)
    }
}

fn from_repr<E: serde::de::Error>(r: NumOrStr) -> Result<f64, E> {
    match r {
        NumOrStr::Num(v) => Ok(v),
        NumOrStr::Str(s) => match s.as_str() {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            _ => Err(E::custom(format!("expected a number, \"inf\" or \"-inf\", got \"{s}\""))),
        },
    }
}

pub mod ext_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| to_repr(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<NumOrStr>::deserialize(d)?.into_iter().map(from_repr).collect()
    }
}
