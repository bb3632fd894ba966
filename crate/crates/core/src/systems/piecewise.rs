//! Piecewise-monotone interval maps: exact images, directed-rounding preimages,
//! and the feasible-set propagation behind interval tracers and failure certificates.

use num_traits::{Signed, Zero};

use crate::interval::{Interval, IntervalSet};
use crate::real::{round_down, round_up, sqrt_bounds, to_f64, Rational};

/// Working precision (fractional bits) for rounded endpoints.
pub const ENCLOSURE_BITS: u32 = 128;
/// Interval sets are capped at this many parts during propagation.
const MAX_PARTS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum Law {
    Affine { slope: Rational, intercept: Rational },
    Square,
}

impl Law {
    pub fn eval(&self, q: &Rational) -> Rational {
        match self {
            Law::Affine { slope, intercept } => slope * q + intercept,
            Law::Square => q * q,
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        match self {
            Law::Affine { slope, intercept } => to_f64(slope) * x + to_f64(intercept),
            Law::Square => x * x,
        }
    }

    /// Laws are strictly monotone on their pieces; `Square` lives on `[0, inf)`.
    pub fn increasing(&self) -> bool {
        match self {
            Law::Affine { slope, .. } => slope.is_positive(),
            Law::Square => true,
        }
    }

    /// Bounds on `f^{-1}(y)`: `(lower, upper, exact)`.
    fn inverse(&self, y: &Rational) -> (Rational, Rational, bool) {
        match self {
            Law::Affine { slope, intercept } => {
                let x = (y - intercept) / slope;
                (x.clone(), x, true)
            }
            Law::Square => {
                if !y.is_positive() {
                    let z = Rational::zero();
                    return (z.clone(), z, true);
                }
                let (lo, hi) = sqrt_bounds(y, ENCLOSURE_BITS);
                let exact = lo == hi;
                (lo, hi, exact)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub lo: Rational,
    /// `None` for an unbounded piece.
    pub hi: Option<Rational>,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub law: Law,
}

impl Piece {
    fn clip(&self, iv: &Interval) -> Option<Interval> {
        let dom_hi = self.hi.clone().unwrap_or_else(|| iv.hi.clone() + Rational::from_integer(1.into()));
        let dom = Interval {
            lo: self.lo.clone(),
            hi: dom_hi,
            lo_closed: self.lo_closed,
            hi_closed: self.hi.is_none() || self.hi_closed,
        };
        dom.intersect(iv)
    }

    /// Domain of the piece intersected with `[lo, hi]`-style bounds used for preimages.
    fn domain_with(&self, lo: Rational, hi: Rational, lo_closed: bool, hi_closed: bool) -> Option<Interval> {
        let iv = Interval::new(lo, hi, lo_closed, hi_closed)?;
        self.clip(&iv)
    }

    pub fn contains(&self, q: &Rational) -> bool {
        let above = if self.lo_closed { *q >= self.lo } else { *q > self.lo };
        let below = match &self.hi {
            None => true,
            Some(h) => {
                if self.hi_closed {
                    q <= h
                } else {
                    q < h
                }
            }
        };
        above && below
    }
}

/// Directed approximation mode for preimages that are not exactly representable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Approx {
    /// Subset of the true set.
    Inner,
    /// Superset of the true set.
    Outer,
}

fn image_of_interval(pieces: &[Piece], iv: &Interval, rounding: Option<Approx>) -> Vec<Interval> {
    let mut out = Vec::new();
    for piece in pieces {
        let Some(j) = piece.clip(iv) else { continue };
        let (a, b) = (piece.law.eval(&j.lo), piece.law.eval(&j.hi));
        let (mut lo, mut hi, mut lo_closed, mut hi_closed) = if piece.law.increasing() {
            (a, b, j.lo_closed, j.hi_closed)
        } else {
            (b, a, j.hi_closed, j.lo_closed)
        };
        if let (Some(mode), Law::Square) = (rounding, &piece.law) {
            let (l, h) = match mode {
                Approx::Outer => (round_down(&lo, ENCLOSURE_BITS), round_up(&hi, ENCLOSURE_BITS)),
                Approx::Inner => (round_up(&lo, ENCLOSURE_BITS), round_down(&hi, ENCLOSURE_BITS)),
            };
            // A moved endpoint lies strictly inside (inner) or outside (outer) the true one.
            if l != lo {
                lo = l;
                lo_closed = true;
            }
            if h != hi {
                hi = h;
                hi_closed = true;
            }
        }
        if let Some(img) = Interval::new(lo, hi, lo_closed, hi_closed) {
            out.push(img);
        }
    }
    out
}

/// Exact image `f(S)`.
pub fn image(pieces: &[Piece], set: &IntervalSet) -> IntervalSet {
    IntervalSet::from_parts(
        set.parts()
            .iter()
            .flat_map(|iv| image_of_interval(pieces, iv, None)),
    )
}

/// `f(S)` with square-law endpoints rounded to `ENCLOSURE_BITS` in the requested direction.
pub fn image_rounded(pieces: &[Piece], set: &IntervalSet, mode: Approx) -> IntervalSet {
    cap_parts(
        IntervalSet::from_parts(
            set.parts()
                .iter()
                .flat_map(|iv| image_of_interval(pieces, iv, Some(mode))),
        ),
        mode,
    )
}

/// Enclosure of `f(iv)` with square laws rounded outward.
pub fn enclose(pieces: &[Piece], iv: &Interval) -> Option<Interval> {
    IntervalSet::from_parts(image_of_interval(pieces, iv, Some(Approx::Outer))).hull()
}

fn cap_parts(set: IntervalSet, mode: Approx) -> IntervalSet {
    if set.parts().len() <= MAX_PARTS {
        return set;
    }
    match mode {
        Approx::Inner => IntervalSet::from_parts(set.parts()[..MAX_PARTS].iter().cloned()),
        Approx::Outer => set.hull().map(IntervalSet::single).unwrap_or_default(),
    }
}

/// Approximation of `f^{-1}(S)` in the requested direction.
pub fn preimage(pieces: &[Piece], set: &IntervalSet, mode: Approx) -> IntervalSet {
    let mut out = Vec::new();
    for piece in pieces {
        for part in set.parts() {
            let clipped;
            let part = if matches!(piece.law, Law::Square) {
                // x^2 only reaches [0, inf).
                let Some(c) = part.intersect(&Interval {
                    lo: Rational::zero(),
                    hi: part.hi.clone().max(Rational::zero()),
                    lo_closed: true,
                    hi_closed: true,
                }) else {
                    continue;
                };
                clipped = c;
                &clipped
            } else {
                part
            };
            let (a_lo, a_hi, a_exact) = piece.law.inverse(&part.lo);
            let (b_lo, b_hi, b_exact) = piece.law.inverse(&part.hi);
            let increasing = piece.law.increasing();
            // Endpoint images under f^{-1}, ordered along x.
            let (lo_bounds, lo_exact, lo_flag, hi_bounds, hi_exact, hi_flag) = if increasing {
                ((a_lo, a_hi), a_exact, part.lo_closed, (b_lo, b_hi), b_exact, part.hi_closed)
            } else {
                ((b_lo, b_hi), b_exact, part.hi_closed, (a_lo, a_hi), a_exact, part.lo_closed)
            };
            let (lo, lo_closed) = match (lo_exact, mode) {
                (true, _) => (lo_bounds.0, lo_flag),
                (false, Approx::Inner) => (lo_bounds.1, true),
                (false, Approx::Outer) => (lo_bounds.0, true),
            };
            let (hi, hi_closed) = match (hi_exact, mode) {
                (true, _) => (hi_bounds.1, hi_flag),
                (false, Approx::Inner) => (hi_bounds.0, true),
                (false, Approx::Outer) => (hi_bounds.1, true),
            };
            if let Some(iv) = piece.domain_with(lo, hi, lo_closed, hi_closed) {
                out.push(iv);
            }
        }
    }
    cap_parts(IntervalSet::from_parts(out), mode)
}

/// The set of `y` with `f^i(y) in constraints[i]` for every constrained index, approximated
/// in the requested direction. `None` entries are unconstrained; a `None` result means no
/// index was constrained at all.
pub fn feasible_set(
    pieces: &[Piece],
    constraints: &[Option<IntervalSet>],
    mode: Approx,
) -> Option<IntervalSet> {
    let last = constraints.iter().rposition(Option::is_some)?;
    let mut set = constraints[last].clone().unwrap();
    for i in (0..last).rev() {
        if set.is_empty() {
            return Some(set);
        }
        set = preimage(pieces, &set, mode);
        if let Some(c) = &constraints[i] {
            set = set.intersect(c);
        }
    }
    Some(set)
}

/// Outer version of [`forward_feasible`] that keeps endpoint sizes bounded. An empty
/// outer set is still a proof that no orbit meets all constraints.
pub fn forward_outer(
    pieces: &[Piece],
    start: &IntervalSet,
    constraints: &[Option<IntervalSet>],
) -> Result<IntervalSet, usize> {
    let mut set = match constraints.first() {
        Some(Some(c)) => start.intersect(c),
        _ => start.clone(),
    };
    if set.is_empty() {
        return Err(0);
    }
    for (i, c) in constraints.iter().enumerate().skip(1) {
        set = image_rounded(pieces, &set, Approx::Outer);
        if let Some(c) = c {
            set = set.intersect(c);
        }
        if set.is_empty() {
            return Err(i);
        }
    }
    Ok(set)
}

/// Forward feasible sets `S_0 = C_0`, `S_{i+1} = f(S_i) ∩ C_{i+1}`, computed exactly.
/// The first empty index certifies that no orbit meets all constraints.
pub fn forward_feasible(
    pieces: &[Piece],
    start: &IntervalSet,
    constraints: &[Option<IntervalSet>],
) -> Result<IntervalSet, usize> {
    let mut set = match constraints.first() {
        Some(Some(c)) => start.intersect(c),
        _ => start.clone(),
    };
    if set.is_empty() {
        return Err(0);
    }
    for (i, c) in constraints.iter().enumerate().skip(1) {
        set = image(pieces, &set);
        if let Some(c) = c {
            set = set.intersect(c);
        }
        if set.is_empty() {
            return Err(i);
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::{int, rat};

    fn squaring() -> Vec<Piece> {
        vec![Piece {
            lo: int(0),
            hi: Some(int(1)),
            lo_closed: true,
            hi_closed: true,
            law: Law::Square,
        }]
    }

    fn tent() -> Vec<Piece> {
        vec![
            Piece {
                lo: int(0),
                hi: Some(rat(1, 2)),
                lo_closed: true,
                hi_closed: true,
                law: Law::Affine { slope: int(2), intercept: int(0) },
            },
            Piece {
                lo: rat(1, 2),
                hi: Some(int(1)),
                lo_closed: true,
                hi_closed: true,
                law: Law::Affine { slope: int(-2), intercept: int(2) },
            },
        ]
    }

    #[test]
    fn tent_image_of_open_unit_interval() {
        let s = IntervalSet::single(Interval::open(int(0), int(1)).unwrap());
        let img = image(&tent(), &s);
        assert_eq!(img.to_string(), "(0, 1]");
    }

    #[test]
    fn square_preimage_directions() {
        let s = IntervalSet::single(Interval::closed(rat(1, 4), rat(1, 2)).unwrap());
        let inner = preimage(&squaring(), &s, Approx::Inner);
        let outer = preimage(&squaring(), &s, Approx::Outer);
        let (i, o) = (&inner.parts()[0], &outer.parts()[0]);
        assert_eq!(i.lo, rat(1, 2));
        assert_eq!(o.lo, rat(1, 2));
        assert!(&i.hi * &i.hi <= rat(1, 2));
        assert!(&o.hi * &o.hi >= rat(1, 2));
        assert!(o.hi >= i.hi);
    }

    #[test]
    fn infeasible_return_is_detected_both_ways() {
        // Near 1 at time 0, near 0 at time 6, near 1 again at time 8.
        let near = |c: Rational| {
            Some(IntervalSet::single(
                Interval::open(c.clone() - rat(1, 10), c + rat(1, 10))
                    .unwrap()
                    .intersect(&Interval::closed(int(0), int(1)).unwrap())
                    .unwrap(),
            ))
        };
        let mut constraints = vec![None; 9];
        constraints[0] = near(int(1));
        constraints[6] = near(int(0));
        constraints[8] = near(int(1));
        let outer = feasible_set(&squaring(), &constraints, Approx::Outer).unwrap();
        assert!(outer.is_empty());
        let start = IntervalSet::single(Interval::closed(int(0), int(1)).unwrap());
        assert_eq!(forward_feasible(&squaring(), &start, &constraints), Err(8));
    }
}
