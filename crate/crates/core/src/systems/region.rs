use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::interval::Interval;
use crate::point::PointValue;
use crate::real::{rational_string, Rational};
use crate::symbolic::{parse_word, word_string};

/// A region of state space: the `U`, `V` of transitivity/mixing tests, sampling windows,
/// and cover elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Ball {
        center: PointValue,
        #[serde(with = "rational_string")]
        radius: Rational,
        #[serde(default = "default_open")]
        open: bool,
    },
    Interval {
        #[serde(flatten)]
        interval: Interval,
    },
    /// Coordinates `start .. start + word.len()` are fixed to `word`.
    Cylinder {
        start: i64,
        #[serde(with = "word_digits")]
        word: Vec<u8>,
    },
}

fn default_open() -> bool {
    true
}

impl Region {
    pub fn ball(center: PointValue, radius: Rational) -> Self {
        Region::Ball {
            center,
            radius,
            open: true,
        }
    }

    pub fn interval(interval: Interval) -> Self {
        Region::Interval { interval }
    }

    pub fn cylinder(start: i64, word: Vec<u8>) -> Self {
        Region::Cylinder { start, word }
    }
}

mod word_digits {
    use super::*;

    pub fn serialize<S: Serializer>(w: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&word_string(w))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        parse_word(&s).map_err(serde::de::Error::custom)
    }
}
