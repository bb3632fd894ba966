//! Three-valued, finite-horizon verdicts and their JSON record.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::point::PointValue;
use crate::real::{format_rational, Rational, Real};
use crate::shadowing::{EscapeCertificate, InfeasibilityCertificate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    FailsWithWitness,
    Inconclusive,
    HoldsUpToHorizon,
}

impl Outcome {
    /// CLI exit code: 0 holds, 1 fails, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::HoldsUpToHorizon => 0,
            Outcome::FailsWithWitness => 1,
            Outcome::Inconclusive => 2,
        }
    }

    pub fn holds(self) -> bool {
        self == Outcome::HoldsUpToHorizon
    }

    pub fn fails(self) -> bool {
        self == Outcome::FailsWithWitness
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A point violating the property, optionally with the time and distance that show it.
    Point {
        point: PointValue,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distance: Option<Real>,
    },
    /// A pair of points and the time at which they are compared.
    Pair {
        first: PointValue,
        second: PointValue,
        index: i64,
        distance: Real,
    },
    /// A time index at which a defining inequality breaks.
    Index { index: i64, distance: Real },
    /// A choice of cover elements along the orbit whose intersection keeps positive measure.
    CoverChain {
        elements: Vec<usize>,
        #[serde(with = "crate::real::rational_string")]
        measure: Rational,
    },
    Escape(EscapeCertificate),
    Infeasible(InfeasibilityCertificate),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub operation: String,
    pub params: BTreeMap<String, Value>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub horizon: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<Verdict>,
}

impl Verdict {
    pub fn new(operation: &str, outcome: Outcome, horizon: u64, seed: u64) -> Self {
        Verdict {
            operation: operation.into(),
            params: BTreeMap::new(),
            outcome,
            witness: None,
            horizon,
            seed,
            parts: Vec::new(),
        }
    }

    pub fn holds(operation: &str, horizon: u64, seed: u64) -> Self {
        Self::new(operation, Outcome::HoldsUpToHorizon, horizon, seed)
    }

    pub fn inconclusive(operation: &str, horizon: u64, seed: u64) -> Self {
        Self::new(operation, Outcome::Inconclusive, horizon, seed)
    }

    pub fn fails(operation: &str, witness: Witness, horizon: u64, seed: u64) -> Self {
        let mut v = Self::new(operation, Outcome::FailsWithWitness, horizon, seed);
        v.witness = Some(witness);
        v
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params
            .insert(key.into(), serde_json::to_value(value).expect("serializable parameter"));
        self
    }

    /// Records a rational as a `"num/den"` string.
    pub fn param_q(self, key: &str, q: &Rational) -> Self {
        self.param(key, format_rational(q))
    }

    pub fn with_parts(mut self, parts: Vec<Verdict>) -> Self {
        self.parts = parts;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdicts serialize")
    }
}

/// Weakest of several outcomes: any failure fails, otherwise any inconclusive part is inconclusive.
pub fn weakest(outcomes: impl IntoIterator<Item = Outcome>) -> Outcome {
    outcomes.into_iter().min().unwrap_or(Outcome::HoldsUpToHorizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::rat;

    #[test]
    fn record_shape() {
        let v = Verdict::fails(
            "demo",
            Witness::Index {
                index: 3,
                distance: Real::Exact(rat(1, 2)),
            },
            6,
            9,
        )
        .param_q("delta", &rat(1, 4));
        let json: Value = serde_json::from_str(&v.to_json()).unwrap();
        assert_eq!(json["outcome"], "fails_with_witness");
        assert_eq!(json["params"]["delta"], "1/4");
        assert_eq!(json["witness"]["distance"], "1/2");
        assert_eq!(json["horizon"], 6);
        let back: Verdict = serde_json::from_str(&v.to_json()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn weakest_outcome() {
        use Outcome::*;
        assert_eq!(weakest([HoldsUpToHorizon, Inconclusive]), Inconclusive);
        assert_eq!(weakest([Inconclusive, FailsWithWitness]), FailsWithWitness);
        assert_eq!(weakest([]), HoldsUpToHorizon);
    }
}
