//! Exact rational intervals with open/closed endpoints and finite unions of them.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::real::{format_rational, rational_string, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "rational_string")]
    pub lo: Rational,
    #[serde(with = "rational_string")]
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    /// `None` when the described set is empty.
    pub fn new(lo: Rational, hi: Rational, lo_closed: bool, hi_closed: bool) -> Option<Self> {
        let iv = Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        };
        (!iv.is_empty()).then_some(iv)
    }

    pub fn closed(lo: Rational, hi: Rational) -> Option<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: Rational, hi: Rational) -> Option<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn point(q: Rational) -> Self {
        Interval {
            lo: q.clone(),
            hi: q,
            lo_closed: true,
            hi_closed: true,
        }
    }

    fn is_empty(&self) -> bool {
        match self.lo.cmp(&self.hi) {
            Ordering::Greater => true,
            Ordering::Equal => !(self.lo_closed && self.hi_closed),
            Ordering::Less => false,
        }
    }

    pub fn contains(&self, q: &Rational) -> bool {
        let above = if self.lo_closed { *q >= self.lo } else { *q > self.lo };
        let below = if self.hi_closed { *q <= self.hi } else { *q < self.hi };
        above && below
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            Ordering::Greater => (self.lo.clone(), self.lo_closed),
            Ordering::Less => (other.lo.clone(), other.lo_closed),
            Ordering::Equal => (self.lo.clone(), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            Ordering::Less => (self.hi.clone(), self.hi_closed),
            Ordering::Greater => (other.hi.clone(), other.hi_closed),
            Ordering::Equal => (self.hi.clone(), self.hi_closed && other.hi_closed),
        };
        Interval::new(lo, hi, lo_closed, hi_closed)
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    /// Every point of `self` lies strictly above every point of `other`.
    pub fn entirely_above(&self, other: &Interval) -> bool {
        match self.lo.cmp(&other.hi) {
            Ordering::Greater => true,
            Ordering::Equal => !(self.lo_closed && other.hi_closed),
            Ordering::Less => false,
        }
    }

    pub fn entirely_below(&self, other: &Interval) -> bool {
        other.entirely_above(self)
    }

    /// Whether the union of the two intervals is itself an interval.
    fn joins(&self, other: &Interval) -> bool {
        let (a, b) = if self.lo <= other.lo { (self, other) } else { (other, self) };
        match a.hi.cmp(&b.lo) {
            Ordering::Greater => true,
            Ordering::Equal => a.hi_closed || b.lo_closed,
            Ordering::Less => false,
        }
    }

    fn hull(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            Ordering::Less => (self.lo.clone(), self.lo_closed),
            Ordering::Greater => (other.lo.clone(), other.lo_closed),
            Ordering::Equal => (self.lo.clone(), self.lo_closed || other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            Ordering::Greater => (self.hi.clone(), self.hi_closed),
            Ordering::Less => (other.hi.clone(), other.hi_closed),
            Ordering::Equal => (self.hi.clone(), self.hi_closed || other.hi_closed),
        };
        Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            format_rational(&self.lo),
            format_rational(&self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Sorted, pairwise disjoint and non-adjacent intervals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn from_parts(parts: impl IntoIterator<Item = Interval>) -> Self {
        let mut parts: Vec<Interval> = parts.into_iter().collect();
        parts.sort_by(|a, b| a.lo.cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(last) if last.joins(&p) => *last = last.hull(&p),
                _ => merged.push(p),
            }
        }
        IntervalSet { parts: merged }
    }

    pub fn single(iv: Interval) -> Self {
        IntervalSet { parts: vec![iv] }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, q: &Rational) -> bool {
        self.parts.iter().any(|p| p.contains(q))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_parts(self.parts.iter().chain(&other.parts).cloned())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                if let Some(c) = a.intersect(b) {
                    out.push(c);
                }
            }
        }
        IntervalSet::from_parts(out)
    }

    pub fn intersect_interval(&self, iv: &Interval) -> IntervalSet {
        self.intersect(&IntervalSet::single(iv.clone()))
    }

    /// Smallest single interval containing the set.
    pub fn hull(&self) -> Option<Interval> {
        let first = self.parts.first()?;
        Some(self.parts.iter().skip(1).fold(first.clone(), |acc, p| acc.hull(p)))
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join(" u "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::rat;

    #[test]
    fn emptiness_respects_flags() {
        assert!(Interval::new(rat(1, 2), rat(1, 2), true, false).is_none());
        assert!(Interval::closed(rat(1, 2), rat(1, 2)).is_some());
        assert!(Interval::open(rat(1, 1), rat(0, 1)).is_none());
    }

    #[test]
    fn union_merges_touching_parts() {
        let a = Interval::new(rat(0, 1), rat(1, 2), false, true).unwrap();
        let b = Interval::new(rat(1, 2), rat(1, 1), true, false).unwrap();
        let s = IntervalSet::from_parts([a.clone(), b.clone()]);
        assert_eq!(s.parts().len(), 1);
        assert_eq!(s.to_string(), "(0, 1)");
        let c = Interval::open(rat(1, 2), rat(1, 1)).unwrap();
        let open_gap = Interval::open(rat(0, 1), rat(1, 2)).unwrap();
        assert_eq!(IntervalSet::from_parts([open_gap, c]).parts().len(), 2);
    }

    #[test]
    fn separation_tests() {
        let a = Interval::open(rat(1, 1), rat(2, 1)).unwrap();
        let v = Interval::open(rat(0, 1), rat(1, 1)).unwrap();
        assert!(a.entirely_above(&v));
        let w = Interval::closed(rat(0, 1), rat(1, 1)).unwrap();
        assert!(a.entirely_above(&w));
        let z = Interval::closed(rat(1, 1), rat(2, 1)).unwrap();
        assert!(!z.entirely_above(&w));
    }
}
