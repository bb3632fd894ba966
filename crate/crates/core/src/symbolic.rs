//! Eventually periodic symbol sequences.
//!
//! A bi-infinite sequence is stored as `(left period, core, right period, offset)`:
//! the core occupies coordinates `offset .. offset + core.len()`, the right period
//! repeats from there towards `+inf`, and the left period repeats towards `-inf`
//! so that coordinates `offset - left.len() .. offset` spell out the left word.
//! Values are kept in a canonical form, so structural equality is sequence equality.

use std::fmt;

use crate::error::{DynError, Result};
use crate::real::{ceil_log2, floor_log2, pow2, Rational};
use num_traits::{One, Signed};

/// Smallest `p` dividing `w.len()` such that `w` is `p`-periodic.
fn primitive_root(w: &[u8]) -> Vec<u8> {
    let n = w.len();
    for p in 1..=n {
        if n % p == 0 && (p..n).all(|i| w[i] == w[i - p]) {
            return w[..p].to_vec();
        }
    }
    w.to_vec()
}

fn rotate_left(w: &[u8], k: usize) -> Vec<u8> {
    let n = w.len();
    (0..n).map(|i| w[(i + k) % n]).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BiSeq {
    left: Vec<u8>,
    core: Vec<u8>,
    right: Vec<u8>,
    offset: i64,
}

impl BiSeq {
    pub fn new(left: Vec<u8>, core: Vec<u8>, right: Vec<u8>, offset: i64) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(DynError::InvalidParameter(
                "periods of a bi-infinite sequence must be non-empty".into(),
            ));
        }
        let mut s = BiSeq {
            left,
            core,
            right,
            offset,
        };
        s.canonicalize();
        Ok(s)
    }

    /// The periodic sequence whose coordinates `0..word.len()` spell `word`.
    pub fn periodic(word: &[u8]) -> Self {
        BiSeq::new(word.to_vec(), Vec::new(), word.to_vec(), 0).expect("non-empty word")
    }

    pub fn constant(symbol: u8) -> Self {
        Self::periodic(&[symbol])
    }

    /// Sequence equal to `word` on `start .. start + word.len()` and `fill` elsewhere.
    pub fn from_window(start: i64, word: &[u8], fill: u8) -> Self {
        BiSeq::new(vec![fill], word.to_vec(), vec![fill], start).expect("non-empty fill")
    }

    pub fn left_period(&self) -> &[u8] {
        &self.left
    }
    pub fn core(&self) -> &[u8] {
        &self.core
    }
    pub fn right_period(&self) -> &[u8] {
        &self.right
    }
    pub fn offset(&self) -> i64 {
        self.offset
    }

    fn core_end(&self) -> i64 {
        self.offset + self.core.len() as i64
    }

    pub fn at(&self, n: i64) -> u8 {
        if n < self.offset {
            let lp = self.left.len() as i64;
            self.left[(n - self.offset).rem_euclid(lp) as usize]
        } else if n < self.core_end() {
            self.core[(n - self.offset) as usize]
        } else {
            let rp = self.right.len() as i64;
            self.right[(n - self.core_end()).rem_euclid(rp) as usize]
        }
    }

    /// Coordinates `lo ..= hi`.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<u8> {
        if hi < lo {
            return Vec::new();
        }
        (lo..=hi).map(|n| self.at(n)).collect()
    }

    /// `sigma^n`, i.e. `(sigma^n x)_m = x_{m+n}`.
    pub fn shift(&self, n: i64) -> Self {
        let mut s = self.clone();
        s.offset -= n;
        if s.core.is_empty() && s.left == s.right {
            s.offset = s.offset.rem_euclid(s.left.len() as i64);
            s.canonical_periodic();
        }
        s
    }

    pub fn max_symbol(&self) -> u8 {
        self.left
            .iter()
            .chain(&self.core)
            .chain(&self.right)
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Prime period if the sequence is periodic.
    pub fn period(&self) -> Option<usize> {
        (self.core.is_empty() && self.left == self.right).then(|| self.right.len())
    }

    /// Smallest coordinate range `[lo, hi)` outside which the sequence follows its tails.
    pub fn support(&self) -> (i64, i64) {
        (self.offset, self.core_end())
    }

    /// Re-expresses the sequence with an explicit core covering `[lo, hi)`.
    /// Requires `lo <= offset` and `hi >= offset + core.len()`.
    fn rebased(&self, lo: i64, hi: i64) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
        debug_assert!(lo <= self.offset && hi >= self.core_end());
        let lp = self.left.len() as i64;
        let rp = self.right.len() as i64;
        let left = (0..lp)
            .map(|k| self.left[(k + lo - self.offset).rem_euclid(lp) as usize])
            .collect();
        let right = (0..rp)
            .map(|k| self.right[(k + hi - self.core_end()).rem_euclid(rp) as usize])
            .collect();
        (left, self.window(lo, hi - 1), right)
    }

    /// Overwrites coordinates `start .. start + word.len()`.
    pub fn with_window(&self, start: i64, word: &[u8]) -> Self {
        let lo = start.min(self.offset);
        let hi = (start + word.len() as i64).max(self.core_end());
        let (left, mut core, right) = self.rebased(lo, hi);
        let at = (start - lo) as usize;
        core[at..at + word.len()].copy_from_slice(word);
        BiSeq::new(left, core, right, lo).expect("periods stay non-empty")
    }

    pub fn with_symbol(&self, n: i64, symbol: u8) -> Self {
        self.with_window(n, &[symbol])
    }

    /// The sequence equal to `left` on coordinates `< at` and to `right` on `>= at`.
    pub fn splice(left: &BiSeq, at: i64, right: &BiSeq) -> Self {
        let l_lo = left.offset.min(at);
        let l_hi = left.core_end().max(at);
        let (l_period, l_core, _) = left.rebased(l_lo, l_hi);
        let r_lo = right.offset.min(at);
        let r_hi = right.core_end().max(at);
        let (_, r_core, r_period) = right.rebased(r_lo, r_hi);
        let mut core = l_core[..(at - l_lo) as usize].to_vec();
        core.extend_from_slice(&r_core[(at - r_lo) as usize..]);
        BiSeq::new(l_period, core, r_period, l_lo).expect("periods stay non-empty")
    }

    /// `min{|n| : x_n != y_n}`, or `None` for equal sequences.
    pub fn first_disagreement(&self, other: &BiSeq) -> Option<u64> {
        if self == other {
            return None;
        }
        let mut n: i64 = 0;
        loop {
            if self.at(n) != other.at(n) || self.at(-n) != other.at(-n) {
                return Some(n as u64);
            }
            n += 1;
        }
    }

    /// `d(x, y) = 2^{-min{|n| : x_n != y_n}}`.
    pub fn distance(&self, other: &BiSeq) -> Rational {
        match self.first_disagreement(other) {
            None => Rational::from_integer(0.into()),
            Some(j) => pow2(-(j as i64)),
        }
    }

    fn canonicalize(&mut self) {
        self.left = primitive_root(&self.left);
        self.right = primitive_root(&self.right);
        // Absorb the end of the core into the right period.
        while let Some(&last) = self.core.last() {
            if last != *self.right.last().unwrap() {
                break;
            }
            self.core.pop();
            let rp = self.right.len();
            self.right = rotate_left(&self.right, rp - 1);
        }
        // Absorb the start of the core into the left period.
        while !self.core.is_empty() && self.core[0] == self.left[0] {
            self.core.remove(0);
            self.offset += 1;
            self.left = rotate_left(&self.left, 1);
        }
        if self.core.is_empty() {
            if self.left == self.right {
                self.offset = self.offset.rem_euclid(self.left.len() as i64);
                self.canonical_periodic();
                return;
            }
            // Move the boundary right while the right tail still continues the left period.
            // Two distinct primitive periodic tails diverge within `lp + rp` symbols.
            let bound = self.left.len() + self.right.len();
            for _ in 0..bound {
                if self.right[0] != self.left[0] {
                    break;
                }
                self.offset += 1;
                self.left = rotate_left(&self.left, 1);
                self.right = rotate_left(&self.right, 1);
                if self.left == self.right {
                    self.offset = self.offset.rem_euclid(self.left.len() as i64);
                    self.canonical_periodic();
                    return;
                }
            }
        }
    }

    /// Periodic form with offset 0: `x_n = w[n mod p]`.
    fn canonical_periodic(&mut self) {
        let p = self.right.len() as i64;
        let k = (-self.offset).rem_euclid(p) as usize;
        let w = rotate_left(&self.right, k);
        self.left = w.clone();
        self.right = w;
        self.offset = 0;
    }
}

impl fmt::Display for BiSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}){}({})@{}",
            word_string(&self.left),
            word_string(&self.core),
            word_string(&self.right),
            self.offset
        )
    }
}

pub fn word_string(w: &[u8]) -> String {
    w.iter().map(|&s| char::from(b'0' + s)).collect()
}

pub fn parse_word(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as u8)
                .ok_or_else(|| DynError::Parse(format!("bad symbol `{c}` in `{s}`")))
        })
        .collect()
}

impl std::str::FromStr for BiSeq {
    type Err = DynError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || DynError::Parse(format!("bad bi-infinite sequence `{s}`"));
        let (body, offset) = s.rsplit_once('@').ok_or_else(bad)?;
        let offset: i64 = offset.trim().parse().map_err(|_| bad())?;
        let body = body.strip_prefix('(').ok_or_else(bad)?;
        let (left, rest) = body.split_once(')').ok_or_else(bad)?;
        let (core, rest) = rest.split_once('(').ok_or_else(bad)?;
        let right = rest.strip_suffix(')').ok_or_else(bad)?;
        BiSeq::new(parse_word(left)?, parse_word(core)?, parse_word(right)?, offset)
    }
}

/// Eventually periodic one-sided sequence `core tail tail tail ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OneSidedSeq {
    core: Vec<u8>,
    tail: Vec<u8>,
}

impl OneSidedSeq {
    pub fn new(core: Vec<u8>, tail: Vec<u8>) -> Result<Self> {
        if tail.is_empty() {
            return Err(DynError::InvalidParameter("tail period must be non-empty".into()));
        }
        let mut s = OneSidedSeq { core, tail };
        s.canonicalize();
        Ok(s)
    }

    pub fn periodic(word: &[u8]) -> Self {
        OneSidedSeq::new(Vec::new(), word.to_vec()).expect("non-empty word")
    }

    pub fn core(&self) -> &[u8] {
        &self.core
    }
    pub fn tail(&self) -> &[u8] {
        &self.tail
    }

    pub fn at(&self, n: u64) -> u8 {
        let n = n as usize;
        if n < self.core.len() {
            self.core[n]
        } else {
            self.tail[(n - self.core.len()) % self.tail.len()]
        }
    }

    pub fn window(&self, lo: u64, hi: u64) -> Vec<u8> {
        if hi < lo {
            return Vec::new();
        }
        (lo..=hi).map(|n| self.at(n)).collect()
    }

    pub fn shift(&self, n: u64) -> Self {
        let n = n as usize;
        if n <= self.core.len() {
            let mut s = OneSidedSeq {
                core: self.core[n..].to_vec(),
                tail: self.tail.clone(),
            };
            s.canonicalize();
            s
        } else {
            let k = (n - self.core.len()) % self.tail.len();
            OneSidedSeq {
                core: Vec::new(),
                tail: rotate_left(&self.tail, k),
            }
        }
    }

    pub fn with_window(&self, start: u64, word: &[u8]) -> Self {
        let end = start as usize + word.len();
        let len = end.max(self.core.len());
        let mut core = self.window(0, len as u64 - 1);
        core[start as usize..end].copy_from_slice(word);
        let k = (len - self.core.len()) % self.tail.len();
        OneSidedSeq::new(core, rotate_left(&self.tail, k)).expect("non-empty tail")
    }

    pub fn first_disagreement(&self, other: &OneSidedSeq) -> Option<u64> {
        if self == other {
            return None;
        }
        (0u64..).find(|&n| self.at(n) != other.at(n))
    }

    pub fn distance(&self, other: &OneSidedSeq) -> Rational {
        match self.first_disagreement(other) {
            None => Rational::from_integer(0.into()),
            Some(j) => pow2(-(j as i64)),
        }
    }

    pub fn period(&self) -> Option<usize> {
        self.core.is_empty().then(|| self.tail.len())
    }

    pub fn max_symbol(&self) -> u8 {
        self.core.iter().chain(&self.tail).copied().max().unwrap_or(0)
    }

    fn canonicalize(&mut self) {
        self.tail = primitive_root(&self.tail);
        while let Some(&last) = self.core.last() {
            if last != *self.tail.last().unwrap() {
                break;
            }
            self.core.pop();
            let tp = self.tail.len();
            self.tail = rotate_left(&self.tail, tp - 1);
        }
    }
}

impl fmt::Display for OneSidedSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", word_string(&self.core), word_string(&self.tail))
    }
}

impl std::str::FromStr for OneSidedSeq {
    type Err = DynError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || DynError::Parse(format!("bad one-sided sequence `{s}`"));
        let (core, rest) = s.split_once('(').ok_or_else(bad)?;
        let tail = rest.strip_suffix(')').ok_or_else(bad)?;
        OneSidedSeq::new(parse_word(core)?, parse_word(tail)?)
    }
}

/// Radius `R` such that `d(u, v) <= delta` iff `u` and `v` agree on `|m| <= R`
/// (two-sided) or `0 <= m <= R` (one-sided). `None` means the bound is vacuous.
pub fn closed_agreement_radius(delta: &Rational) -> Option<u64> {
    if *delta >= Rational::one() {
        return None;
    }
    assert!(delta.is_positive());
    Some((ceil_log2(&delta.recip()) - 1) as u64)
}

/// Radius `R` such that `d(u, v) < eps` iff `u` and `v` agree on `|m| <= R`.
/// `None` means the bound is vacuous.
pub fn open_agreement_radius(eps: &Rational) -> Option<u64> {
    if *eps > Rational::one() {
        return None;
    }
    assert!(eps.is_positive());
    Some(floor_log2(&eps.recip()) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::rat;

    fn seq(s: &str) -> BiSeq {
        s.parse().unwrap()
    }

    #[test]
    fn periodic_offset_is_reduced() {
        let x = BiSeq::periodic(&[0, 1]);
        assert_eq!(x.shift(2), x);
        assert_eq!(x.shift(1), BiSeq::periodic(&[1, 0]));
        assert_eq!(x.period(), Some(2));
        assert_eq!(BiSeq::periodic(&[0, 1, 0, 1]), x);
    }

    #[test]
    fn canonical_form_absorbs_redundant_core() {
        let a = BiSeq::new(vec![0], vec![0, 0, 1, 0], vec![0], -2).unwrap();
        let b = BiSeq::from_window(0, &[1], 0);
        assert_eq!(a, b);
        assert_eq!(b.to_string(), "(0)1(0)@0");
        // ...000111... written two ways
        let c = BiSeq::new(vec![0], vec![1, 1], vec![1], 3).unwrap();
        let d = BiSeq::new(vec![0], vec![], vec![1], 3).unwrap();
        assert_eq!(c, d);
        let e = BiSeq::new(vec![0], vec![], vec![0, 1], 0).unwrap();
        let f = BiSeq::new(vec![0], vec![0], vec![1, 0], 0).unwrap();
        assert_eq!(e, f);
        assert_eq!(e.at(0), 0);
        assert_eq!(e.at(1), 1);
    }

    #[test]
    fn shift_and_distance() {
        let x = BiSeq::from_window(0, &[1], 0);
        let zero = BiSeq::constant(0);
        assert_eq!(x.distance(&zero), rat(1, 1));
        assert_eq!(x.shift(1).at(-1), 1);
        assert_eq!(x.shift(5).distance(&zero), pow2(-5));
        assert_eq!(zero.distance(&zero), rat(0, 1));
    }

    #[test]
    fn splice_and_window() {
        let zeros = BiSeq::constant(0);
        let ones = BiSeq::constant(1);
        let z = BiSeq::splice(&ones, 0, &zeros);
        assert_eq!(z.at(-1), 1);
        assert_eq!(z.at(0), 0);
        assert_eq!(z, seq("(1)(0)@0"));
        let w = zeros.with_window(-2, &[1, 1, 0, 1]);
        assert_eq!(w.window(-3, 2), vec![0, 1, 1, 0, 1, 0]);
    }

    #[test]
    fn encoding_round_trips() {
        for s in ["(01)(01)@0", "(0)1(0)@0", "(1)(0)@0", "(01)110(0)@-3"] {
            let x = seq(s);
            assert_eq!(seq(&x.to_string()), x);
        }
        let o: OneSidedSeq = "10(01)".parse().unwrap();
        assert_eq!(o.to_string().parse::<OneSidedSeq>().unwrap(), o);
    }

    #[test]
    fn one_sided_shift() {
        let o = OneSidedSeq::new(vec![1, 1], vec![0]).unwrap();
        assert_eq!(o.shift(1).window(0, 2), vec![1, 0, 0]);
        assert_eq!(o.shift(5), OneSidedSeq::periodic(&[0]));
        assert_eq!(o.distance(&o.shift(1)), rat(1, 2));
    }

    #[test]
    fn agreement_radii() {
        assert_eq!(closed_agreement_radius(&rat(1, 2)), Some(0));
        assert_eq!(closed_agreement_radius(&rat(1, 4)), Some(1));
        assert_eq!(closed_agreement_radius(&rat(3, 10)), Some(1));
        assert_eq!(closed_agreement_radius(&rat(1, 1)), None);
        assert_eq!(open_agreement_radius(&rat(1, 4)), Some(2));
        assert_eq!(open_agreement_radius(&rat(3, 10)), Some(1));
        assert_eq!(open_agreement_radius(&rat(1, 1)), Some(0));
        assert_eq!(open_agreement_radius(&rat(2, 1)), None);
    }
}
