//! State representations shared by every system in the zoo.
//!
//! Encodings (used by JSON records and the CLI):
//!
//! | variant | example |
//! |---|---|
//! | bi-infinite sequence | `(01)110(0)@-3` |
//! | one-sided sequence | `110(0)` |
//! | exact scalar | `1/2`, `3` |
//! | float scalar | `~0.3` |
//! | satellite orbit point | `E(1,5,0)` |
//! | satellite base point | `Y[(01)(01)@0]` |
//! | ladder point | `a`, `b`, `x-3` |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{DynError, Result};
use crate::real::{format_rational, parse_rational, to_f64, Rational, Real};
use crate::symbolic::{BiSeq, OneSidedSeq};

#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(Rational),
    Float(f64),
}

impl Scalar {
    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => to_f64(q),
            Scalar::Float(x) => *x,
        }
    }

    pub fn as_real(&self) -> Real {
        match self {
            Scalar::Exact(q) => Real::Exact(q.clone()),
            Scalar::Float(x) => Real::Approx(*x),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            (Scalar::Float(a), Scalar::Float(b)) => a == b,
            _ => false,
        }
    }
}

/// Point of the identity ladder: the two limits `a = 1`, `b = -1`, or the rung `tanh(i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LadderPoint {
    Upper,
    Lower,
    Rung(i64),
}

/// Point of a satellite extension: a base point, or the orbit point `q(i, k, j)`.
#[derive(Clone, Debug, PartialEq)]
pub enum SatellitePoint {
    Base(Box<PointValue>),
    Orbit { copy: u8, level: u64, phase: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointValue {
    BiSeq(BiSeq),
    OneSided(OneSidedSeq),
    Scalar(Scalar),
    Satellite(SatellitePoint),
    Ladder(LadderPoint),
}

impl PointValue {
    pub fn exact(q: Rational) -> Self {
        PointValue::Scalar(Scalar::Exact(q))
    }

    pub fn float(x: f64) -> Self {
        PointValue::Scalar(Scalar::Float(x))
    }

    pub fn orbit_point(copy: u8, level: u64, phase: u32) -> Self {
        PointValue::Satellite(SatellitePoint::Orbit { copy, level, phase })
    }

    pub fn base_point(p: PointValue) -> Self {
        PointValue::Satellite(SatellitePoint::Base(Box::new(p)))
    }

    pub fn as_biseq(&self) -> Option<&BiSeq> {
        match self {
            PointValue::BiSeq(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_one_sided(&self) -> Option<&OneSidedSeq> {
        match self {
            PointValue::OneSided(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_scalar(&self) -> Option<&Scalar> {
        match self {
            PointValue::Scalar(s) => Some(s),
            _ => None,
        }
    }

    /// Whether the value is carried without rounding.
    pub fn is_exact(&self) -> bool {
        match self {
            PointValue::Scalar(s) => s.is_exact(),
            PointValue::Ladder(LadderPoint::Rung(_)) => false,
            PointValue::Satellite(SatellitePoint::Base(p)) => p.is_exact(),
            _ => true,
        }
    }
}

impl From<BiSeq> for PointValue {
    fn from(s: BiSeq) -> Self {
        PointValue::BiSeq(s)
    }
}

impl From<OneSidedSeq> for PointValue {
    fn from(s: OneSidedSeq) -> Self {
        PointValue::OneSided(s)
    }
}

impl From<Rational> for PointValue {
    fn from(q: Rational) -> Self {
        PointValue::exact(q)
    }
}

impl fmt::Display for PointValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointValue::BiSeq(s) => write!(f, "{s}"),
            PointValue::OneSided(s) => write!(f, "{s}"),
            PointValue::Scalar(Scalar::Exact(q)) => write!(f, "{}", format_rational(q)),
            PointValue::Scalar(Scalar::Float(x)) => write!(f, "~{x:?}"),
            PointValue::Satellite(SatellitePoint::Base(p)) => write!(f, "Y[{p}]"),
            PointValue::Satellite(SatellitePoint::Orbit { copy, level, phase }) => {
                write!(f, "E({copy},{level},{phase})")
            }
            PointValue::Ladder(LadderPoint::Upper) => write!(f, "a"),
            PointValue::Ladder(LadderPoint::Lower) => write!(f, "b"),
            PointValue::Ladder(LadderPoint::Rung(i)) => write!(f, "x{i}"),
        }
    }
}

impl FromStr for PointValue {
    type Err = DynError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || DynError::Parse(format!("bad point `{s}`"));
        if let Some(inner) = s.strip_prefix("Y[").and_then(|r| r.strip_suffix(']')) {
            return Ok(PointValue::base_point(inner.parse()?));
        }
        if let Some(inner) = s.strip_prefix("E(").and_then(|r| r.strip_suffix(')')) {
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            return Ok(PointValue::orbit_point(
                parts[0].parse().map_err(|_| bad())?,
                parts[1].parse().map_err(|_| bad())?,
                parts[2].parse().map_err(|_| bad())?,
            ));
        }
        match s {
            "a" => return Ok(PointValue::Ladder(LadderPoint::Upper)),
            "b" => return Ok(PointValue::Ladder(LadderPoint::Lower)),
            _ => {}
        }
        if let Some(i) = s.strip_prefix('x') {
            return Ok(PointValue::Ladder(LadderPoint::Rung(
                i.parse().map_err(|_| bad())?,
            )));
        }
        if let Some(x) = s.strip_prefix('~') {
            return Ok(PointValue::float(x.parse().map_err(|_| bad())?));
        }
        if s.contains('@') {
            return Ok(PointValue::BiSeq(s.parse()?));
        }
        if s.contains('(') {
            return Ok(PointValue::OneSided(s.parse()?));
        }
        Ok(PointValue::exact(parse_rational(s)?))
    }
}

impl Serialize for PointValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PointValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::rat;

    #[test]
    fn encodings_round_trip() {
        let pts = [
            PointValue::BiSeq(BiSeq::periodic(&[0, 1])),
            PointValue::OneSided(OneSidedSeq::periodic(&[1])),
            PointValue::exact(rat(1, 3)),
            PointValue::exact(rat(-4, 1)),
            PointValue::float(0.1),
            PointValue::orbit_point(2, 5, 1),
            PointValue::base_point(PointValue::BiSeq(BiSeq::constant(0))),
            PointValue::Ladder(LadderPoint::Upper),
            PointValue::Ladder(LadderPoint::Rung(-3)),
        ];
        for p in pts {
            let back: PointValue = p.to_string().parse().unwrap();
            assert_eq!(back, p, "{p}");
        }
    }

    #[test]
    fn garbage_is_rejected() {
        assert!("E(1,2)".parse::<PointValue>().is_err());
        assert!("(0x)(1)@0".parse::<PointValue>().is_err());
        assert!("hello".parse::<PointValue>().is_err());
    }
}
