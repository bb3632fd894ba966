//! Identity on an accumulating ladder `{a, b} ∪ {tanh(i) : i ∈ Z}` with `a = 1`, `b = -1`.
//!
//! Rungs close to the limits are separated by amounts far below `f64` resolution of
//! `tanh`, so distances are computed from the tails `1 - tanh(|i|) = 2 / (e^{2|i|} + 1)`.

use crate::point::LadderPoint;

/// Rungs are restricted to `|i| <= RUNG_LIMIT`, where tails stay representable.
pub const RUNG_LIMIT: i64 = 350;

fn tail(i: i64) -> f64 {
    2.0 / ((2.0 * i.unsigned_abs() as f64).exp() + 1.0)
}

/// `(side, distance to the limit on that side)`.
fn polar(p: LadderPoint) -> (bool, f64) {
    match p {
        LadderPoint::Upper => (true, 0.0),
        LadderPoint::Lower => (false, 0.0),
        LadderPoint::Rung(i) => (i >= 0, tail(i)),
    }
}

pub fn value(p: LadderPoint) -> f64 {
    let (up, t) = polar(p);
    if up {
        1.0 - t
    } else {
        t - 1.0
    }
}

pub fn distance(p: LadderPoint, q: LadderPoint) -> f64 {
    if p == q {
        return 0.0;
    }
    let (pu, pt) = polar(p);
    let (qu, qt) = polar(q);
    if pu == qu {
        (pt - qt).abs()
    } else {
        2.0 - pt - qt
    }
}

pub fn in_range(p: LadderPoint) -> bool {
    match p {
        LadderPoint::Rung(i) => i.abs() <= RUNG_LIMIT,
        _ => true,
    }
}

/// All representable points, limits first when present.
pub fn all_points(with_limits: bool) -> Vec<LadderPoint> {
    let mut pts = Vec::new();
    if with_limits {
        pts.push(LadderPoint::Upper);
        pts.push(LadderPoint::Lower);
    }
    pts.extend((-RUNG_LIMIT..=RUNG_LIMIT).map(LadderPoint::Rung));
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_match_tanh_where_resolvable() {
        for (i, j) in [(0, 1), (-2, 3), (1, 2), (-1, -4)] {
            let d = distance(LadderPoint::Rung(i), LadderPoint::Rung(j));
            let direct = ((i as f64).tanh() - (j as f64).tanh()).abs();
            assert!((d - direct).abs() < 1e-12, "{i} {j}");
        }
        assert_eq!(distance(LadderPoint::Upper, LadderPoint::Lower), 2.0);
    }

    #[test]
    fn far_rungs_stay_distinct() {
        let d = distance(LadderPoint::Rung(300), LadderPoint::Upper);
        assert!(d > 0.0);
        assert!(distance(LadderPoint::Rung(300), LadderPoint::Rung(301)) > 0.0);
    }
}
