//! Seeds, candidate generation and Monte-Carlo confidence intervals.

use num_traits::{One, Signed, Zero};

use crate::error::{DynError, Result};
use crate::point::{PointValue, SatellitePoint, Scalar};
use crate::real::{from_f64, int, pow2, rat, Rational, Real};
use crate::symbolic::closed_agreement_radius;
use crate::systems::{ladder, Region, System, SystemKind};

/// Seed for shard `index` of a run with master seed `master`.
pub fn shard_seed(master: u64, index: u64) -> u64 {
    master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `hits` successes out of `n`: `(centre, half_width)`.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.5, 0.5);
    }
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    (centre, half)
}

/// Points `y != x` with `d(x, y) <= radius`: structured perturbations of `x` followed by
/// seeded samples of the closed ball. Ladder balls are listed exhaustively.
pub fn neighbours(
    system: &System,
    x: &PointValue,
    radius: &Rational,
    budget: usize,
    seed: u64,
) -> Result<Vec<PointValue>> {
    system.check_point(x)?;
    if !radius.is_positive() {
        return Err(DynError::InvalidParameter("radius must be positive".into()));
    }
    let budget = budget.max(4);
    let mut out = structured(system, x, radius, budget)?;
    let ball = Region::Ball {
        center: x.clone(),
        radius: radius.clone(),
        open: false,
    };
    if !matches!(system.kind(), SystemKind::Ladder { .. }) {
        match system.sample(&ball, budget / 2, seed) {
            Ok(mut s) => out.append(&mut s),
            Err(DynError::EmptyRegion) => {}
            Err(e) => return Err(e),
        }
    }
    let r = Real::Exact(radius.clone());
    let mut kept: Vec<PointValue> = Vec::with_capacity(out.len());
    for y in out {
        if y == *x || !system.contains(&y) || kept.contains(&y) {
            continue;
        }
        if system.distance(x, &y)?.le(&r) {
            kept.push(y);
        }
    }
    Ok(kept)
}

fn structured(system: &System, x: &PointValue, radius: &Rational, budget: usize) -> Result<Vec<PointValue>> {
    let flips = (budget / 4).max(1) as i64;
    let r0 = closed_agreement_radius(radius).map(|r| r as i64 + 1).unwrap_or(0);
    Ok(match (system.kind(), x) {
        (SystemKind::FullShift { alphabet }, PointValue::BiSeq(s)) => {
            let mut v = Vec::new();
            for j in r0..r0 + flips {
                for c in [j, -j] {
                    v.push(PointValue::BiSeq(s.with_symbol(c, (s.at(c) + 1) % alphabet)));
                }
            }
            v
        }
        (SystemKind::OneSidedShift { alphabet }, PointValue::OneSided(s)) => (r0..r0 + flips)
            .map(|j| {
                let j = j as u64;
                PointValue::OneSided(s.with_window(j, &[(s.at(j) + 1) % alphabet]))
            })
            .collect(),
        (SystemKind::Ladder { with_limits }, _) => ladder::all_points(*with_limits)
            .into_iter()
            .map(PointValue::Ladder)
            .collect(),
        (SystemKind::Satellite(sat), PointValue::Satellite(sp)) => {
            let k0 = (Rational::one() / radius).ceil().to_integer();
            let k0: u64 = k0.try_into().unwrap_or(u64::MAX / 2);
            let mut levels: Vec<u64> = (1..=16).chain(k0..k0.saturating_add(16)).collect();
            levels.sort_unstable();
            levels.dedup();
            let mut v = Vec::new();
            for &level in &levels {
                for copy in 1..=3 {
                    for phase in 0..sat.period() {
                        v.push(PointValue::orbit_point(copy, level, phase));
                    }
                }
            }
            let (base_center, slack) = match sp {
                SatellitePoint::Base(b) => ((**b).clone(), Rational::zero()),
                SatellitePoint::Orbit { level, phase, .. } => {
                    (sat.phase_point(*phase).clone(), rat(1, *level as i64))
                }
            };
            v.push(PointValue::base_point(base_center.clone()));
            let rest = radius - slack;
            if rest.is_positive() {
                for y in neighbours(sat.base(), &base_center, &rest, budget, 0)? {
                    v.push(PointValue::base_point(y));
                }
            }
            v
        }
        (_, PointValue::Scalar(s)) => {
            let c = match s {
                Scalar::Exact(q) => q.clone(),
                Scalar::Float(f) => from_f64(*f)?,
            };
            let circle = matches!(system.kind(), SystemKind::DoublingCircle);
            let mut v = Vec::new();
            for k in 0..flips.min(64) {
                let h = radius * pow2(-k);
                for y in [&c + &h, &c - &h] {
                    let y = if circle { &y - y.floor() } else { y };
                    if y >= int(0) {
                        v.push(PointValue::exact(y));
                    }
                }
            }
            v
        }
        _ => return Err(DynError::MixedSystemPoints),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::BiSeq;

    #[test]
    fn wilson_matches_reference_values() {
        let (c, h) = wilson_interval(50, 100);
        assert!((c - 0.5).abs() < 1e-12);
        assert!((h - 0.0961).abs() < 1e-3);
        let (c0, h0) = wilson_interval(0, 1000);
        assert!(c0 > 0.0 && c0 - h0 <= 1e-12);
    }

    #[test]
    fn shard_seeds_differ() {
        assert_eq!(shard_seed(5, 0), 5);
        assert_ne!(shard_seed(5, 1), shard_seed(5, 2));
    }

    #[test]
    fn neighbours_lie_in_the_closed_ball() {
        let shift = System::full_shift(2);
        let x = PointValue::BiSeq(BiSeq::periodic(&[0, 1, 1]));
        let r = rat(1, 8);
        let ns = neighbours(&shift, &x, &r, 40, 3).unwrap();
        assert!(ns.len() > 10);
        for y in &ns {
            assert!(shift.distance(&x, y).unwrap().le(&Real::Exact(r.clone())));
            assert_ne!(y, &x);
        }
        let sq = System::squaring();
        let ns = neighbours(&sq, &PointValue::exact(int(1)), &rat(1, 10), 20, 1).unwrap();
        assert!(ns.iter().all(|y| sq.contains(y)));
        assert!(!ns.is_empty());
    }
}
