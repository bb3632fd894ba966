//! Transition times `f^n(U) ∩ V ≠ ∅` and mixing/transitive points.

use serde::{Deserialize, Serialize};

use crate::error::{DynError, Result};
use crate::expansivity::measure::cover_constraints as region_pins;
use crate::interval::Interval;
use crate::point::PointValue;
use crate::real::{int, rat, Rational};
use crate::systems::piecewise::image_rounded;
use crate::systems::{Approx, Drift, Region, System, SystemKind};
use crate::verdict::{Verdict, Witness};

/// `f^n(U)` is disjoint from `V` at `step` and, by monotone drift, at every later step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeCertificate {
    pub u: Region,
    pub v: Region,
    pub step: u64,
    /// Outer enclosure of the hull of `f^step(U)`.
    pub image_hull: Interval,
    pub drift: Drift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transition {
    /// `f^n(U) ∩ V ≠ ∅` for all `time <= n <= n_max`, and for all `n >= time` when `proven`.
    Time { time: u64, proven: bool },
    Escapes(EscapeCertificate),
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Hit {
    Yes,
    No,
    Unknown,
}

struct Profile {
    hits: Vec<Hit>,
    /// Every `n` from here on is known to hit.
    proven_from: Option<u64>,
    escape: Option<EscapeCertificate>,
}

fn shift_profile(system: &System, u: &Region, v: &Region, n_max: u64) -> Result<Profile> {
    let up = region_pins(system, u)?;
    let vp = region_pins(system, v)?;
    let alphabet = system.alphabet().unwrap_or(2);
    if up.values().chain(vp.values()).any(|&s| s >= alphabet) {
        return Err(DynError::EmptyRegion);
    }
    // y ∈ U with σ^n y ∈ V exists unless U and the shifted V pin a coordinate differently.
    let conflict = |n: i64| vp.iter().any(|(c, s)| up.get(&(c + n)).is_some_and(|t| t != s));
    let last_conflict = match (up.keys().next_back(), vp.keys().next()) {
        (Some(&u_hi), Some(&v_lo)) => (0..=(u_hi - v_lo).max(0)).rev().find(|&n| conflict(n)),
        _ => None,
    };
    let time = last_conflict.map_or(0, |n| n as u64 + 1);
    let hits = (0..=n_max)
        .map(|n| if conflict(n as i64) { Hit::No } else { Hit::Yes })
        .collect();
    Ok(Profile {
        hits,
        proven_from: Some(time),
        escape: None,
    })
}

fn interval_profile(system: &System, u: &Region, v: &Region, n_max: u64) -> Result<Profile> {
    let pieces = system.pieces()?;
    let u_set = system.region_to_intervals(u)?;
    let v_set = system.region_to_intervals(v)?;
    if u_set.is_empty() || v_set.is_empty() {
        return Err(DynError::EmptyRegion);
    }
    let v_hull = v_set.hull().expect("non-empty");
    let mut inner = u_set.clone();
    let mut outer = u_set;
    let mut hits = Vec::new();
    let mut escape = None;
    for n in 0..=n_max {
        if n > 0 {
            inner = image_rounded(&pieces, &inner, Approx::Inner);
            outer = image_rounded(&pieces, &outer, Approx::Outer);
        }
        let hit = if !inner.intersect(&v_set).is_empty() {
            Hit::Yes
        } else if outer.intersect(&v_set).is_empty() {
            Hit::No
        } else {
            Hit::Unknown
        };
        hits.push(hit);
        if hit == Hit::No {
            if let (Some(drift), Some(h)) = (system.drift(), outer.hull()) {
                let away = match drift {
                    Drift::Up => h.entirely_above(&v_hull),
                    Drift::Down => h.entirely_below(&v_hull),
                };
                if away {
                    escape = Some(EscapeCertificate {
                        u: u.clone(),
                        v: v.clone(),
                        step: n,
                        image_hull: h,
                        drift,
                    });
                    hits.extend(std::iter::repeat(Hit::No).take((n_max - n) as usize));
                    break;
                }
            }
        }
    }
    Ok(Profile {
        hits,
        proven_from: None,
        escape,
    })
}

fn sampled_profile(system: &System, u: &Region, v: &Region, n_max: u64, seed: u64) -> Result<Profile> {
    let mut pts = system.sample(u, 64, seed)?;
    let mut hits = Vec::new();
    for n in 0..=n_max {
        if n > 0 {
            pts = pts.iter().map(|p| system.step(p)).collect::<Result<_>>()?;
        }
        let mut hit = Hit::Unknown;
        for p in &pts {
            if system.region_contains(v, p)? {
                hit = Hit::Yes;
                break;
            }
        }
        hits.push(hit);
    }
    Ok(Profile {
        hits,
        proven_from: None,
        escape: None,
    })
}

fn profile(system: &System, u: &Region, v: &Region, n_max: u64, seed: u64) -> Result<Profile> {
    match system.kind() {
        SystemKind::FullShift { .. } | SystemKind::OneSidedShift { .. } => shift_profile(system, u, v, n_max),
        _ if system.pieces().is_ok() => interval_profile(system, u, v, n_max),
        _ => sampled_profile(system, u, v, n_max, seed),
    }
}

/// Least `N` with `f^n(U) ∩ V ≠ ∅` for all `N <= n <= n_max` (for all `n >= N` on shifts),
/// or an escape certificate proving the intersections stay empty.
pub fn mixing_transition_time(system: &System, u: &Region, v: &Region, n_max: u64, seed: u64) -> Result<Transition> {
    let p = profile(system, u, v, n_max, seed)?;
    if let Some(time) = p.proven_from {
        return Ok(Transition::Time { time, proven: true });
    }
    if let Some(e) = p.escape {
        return Ok(Transition::Escapes(e));
    }
    let tail = p.hits.iter().rev().take_while(|h| **h == Hit::Yes).count() as u64;
    if tail == 0 {
        return Ok(Transition::Inconclusive);
    }
    Ok(Transition::Time {
        time: n_max + 1 - tail,
        proven: false,
    })
}

/// Independent re-check of an escape certificate.
pub fn check_escape(system: &System, cert: &EscapeCertificate) -> Result<bool> {
    if system.drift() != Some(cert.drift) {
        return Ok(false);
    }
    let pieces = system.pieces()?;
    let mut outer = system.region_to_intervals(&cert.u)?;
    for _ in 0..cert.step {
        outer = image_rounded(&pieces, &outer, Approx::Outer);
    }
    let Some(h) = outer.hull() else {
        return Ok(true);
    };
    let v = system.region_to_intervals(&cert.v)?;
    let Some(vh) = v.hull() else {
        return Ok(true);
    };
    let inside = cert.image_hull.lo <= h.lo && h.hi <= cert.image_hull.hi;
    let away = match cert.drift {
        Drift::Up => cert.image_hull.entirely_above(&vh),
        Drift::Down => cert.image_hull.entirely_below(&vh),
    };
    Ok(inside && away)
}

fn point_verdict(
    op: &str,
    system: &System,
    x: &PointValue,
    radii: &[Rational],
    probes: &[Region],
    n_max: u64,
    seed: u64,
    mixing: bool,
) -> Result<Verdict> {
    if radii.is_empty() || probes.is_empty() {
        return Err(DynError::InvalidParameter("need radii and probe regions".into()));
    }
    system.check_point(x)?;
    let mut undecided = 0usize;
    let mut max_time = 0u64;
    for r in radii {
        let u = Region::ball(x.clone(), r.clone());
        for v in probes {
            let p = profile(system, &u, v, n_max, seed)?;
            if let Some(e) = p.escape {
                return Ok(Verdict::fails(op, Witness::Escape(e), n_max, seed).param("x", x));
            }
            let ok = if mixing {
                match p.proven_from {
                    Some(t) => {
                        max_time = max_time.max(t);
                        true
                    }
                    None => {
                        let tail = p.hits.iter().rev().take_while(|h| **h == Hit::Yes).count() as u64;
                        max_time = max_time.max(n_max + 1 - tail);
                        tail > 0
                    }
                }
            } else {
                match p.hits.iter().position(|h| *h == Hit::Yes) {
                    Some(t) => {
                        max_time = max_time.max(t as u64);
                        true
                    }
                    None => false,
                }
            };
            if !ok {
                undecided += 1;
            }
        }
    }
    let v = if undecided == 0 {
        Verdict::holds(op, n_max, seed).param("max_transition_time", max_time)
    } else {
        Verdict::inconclusive(op, n_max, seed).param("undecided", undecided)
    };
    Ok(v.param("x", x).param("radii", radii.len()).param("probes", probes.len()))
}

/// Probe regions `V` used when a run does not list its own: `count` seeded cylinders on
/// shifts, fixed balls elsewhere.
pub fn default_probes(system: &System, count: usize, seed: u64) -> Result<Vec<Region>> {
    use rand::{Rng, SeedableRng};
    let ball = |c: Rational, r: Rational| Region::ball(PointValue::exact(c), r);
    Ok(match system.kind() {
        SystemKind::FullShift { alphabet } | SystemKind::OneSidedShift { alphabet } => {
            let lo = if matches!(system.kind(), SystemKind::FullShift { .. }) { -4 } else { 0 };
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..count.max(1))
                .map(|_| {
                    let start = rng.gen_range(lo..=4);
                    let len = rng.gen_range(1..=3);
                    Region::cylinder(start, (0..len).map(|_| rng.gen_range(0..*alphabet)).collect())
                })
                .collect()
        }
        SystemKind::DoublingLine { .. } => vec![ball(int(0), rat(1, 8)), ball(int(3), rat(1, 4))],
        SystemKind::Squaring => vec![ball(rat(1, 2), rat(1, 10)), ball(rat(1, 20), rat(1, 40))],
        SystemKind::Tent | SystemKind::DoublingCircle | SystemKind::Identity => {
            (0..4).map(|k| ball(rat(2 * k + 1, 8), rat(1, 16))).collect()
        }
        _ => system
            .sample(&system.whole_region(), count.max(1), seed)?
            .into_iter()
            .map(|c| Region::ball(c, rat(1, 4)))
            .collect(),
    })
}

/// Every ball around `x` reaches every probe region from some time on, up to `n_max`.
pub fn mixing_point_verdict(
    system: &System,
    x: &PointValue,
    radii: &[Rational],
    probes: &[Region],
    n_max: u64,
    seed: u64,
) -> Result<Verdict> {
    point_verdict("mixing_point", system, x, radii, probes, n_max, seed, true)
}

/// Every ball around `x` reaches every probe region at some time `n <= n_max`.
pub fn transitive_point_verdict(
    system: &System,
    x: &PointValue,
    radii: &[Rational],
    probes: &[Region],
    n_max: u64,
    seed: u64,
) -> Result<Verdict> {
    point_verdict("transitive_point", system, x, radii, probes, n_max, seed, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::{int, rat, to_f64};

    #[test]
    fn shift_transition_from_word_lengths() {
        let shift = System::full_shift(2);
        for a in 1..5usize {
            for b in 1..4usize {
                let u = Region::cylinder(0, vec![1; a]);
                let v = Region::cylinder(0, vec![0; b]);
                match mixing_transition_time(&shift, &u, &v, 12, 0).unwrap() {
                    Transition::Time { time, proven } => {
                        assert!(proven);
                        assert_eq!(time, a as u64);
                    }
                    other => panic!("{other:?}"),
                }
            }
        }
        let same = Region::cylinder(0, vec![1, 1]);
        assert_eq!(
            mixing_transition_time(&shift, &same, &same, 4, 0).unwrap(),
            Transition::Time { time: 0, proven: true }
        );
    }

    #[test]
    fn line_escapes() {
        let line = System::doubling_line();
        let u = Region::interval(Interval::open(int(1), int(2)).unwrap());
        let v = Region::interval(Interval::open(int(0), rat(1, 2)).unwrap());
        match mixing_transition_time(&line, &u, &v, 10, 0).unwrap() {
            Transition::Escapes(c) => {
                assert_eq!(c.step, 0);
                assert!(check_escape(&line, &c).unwrap());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn squaring_reaches_near_zero() {
        let sq = System::squaring();
        let u = Region::interval(Interval::open(rat(9, 10), int(1)).unwrap());
        let v = Region::interval(Interval::open(int(0), rat(1, 10)).unwrap());
        // 0.9^(2^n) < 0.1 first at n = 5.
        let expect = (0..).find(|&n| 0.9f64.powi(1 << n) < 0.1).unwrap();
        match mixing_transition_time(&sq, &u, &v, 12, 0).unwrap() {
            Transition::Time { time, proven } => {
                assert!(!proven);
                assert_eq!(time, expect as u64);
            }
            other => panic!("{other:?}"),
        }
        assert!(to_f64(&rat(9, 10)) > 0.0);
    }

    #[test]
    fn mixing_points_of_the_examples() {
        let line = System::doubling_line();
        let probes = vec![
            Region::ball(PointValue::exact(int(0)), rat(1, 8)),
            Region::ball(PointValue::exact(int(3)), rat(1, 4)),
        ];
        let radii = [rat(1, 8), rat(1, 16)];
        for x in [rat(1, 2), int(1), int(2)] {
            let v = mixing_point_verdict(&line, &PointValue::exact(x), &radii, &probes, 12, 0).unwrap();
            match &v.witness {
                Some(Witness::Escape(c)) => assert!(check_escape(&line, c).unwrap()),
                other => panic!("{other:?}"),
            }
        }
        let v = mixing_point_verdict(&line, &PointValue::exact(int(0)), &radii, &probes, 12, 0).unwrap();
        assert!(v.outcome.holds());
        let sq = System::squaring();
        let probes = vec![
            Region::ball(PointValue::exact(rat(1, 2)), rat(1, 10)),
            Region::ball(PointValue::exact(rat(1, 20)), rat(1, 40)),
        ];
        assert!(mixing_point_verdict(&sq, &PointValue::exact(int(1)), &radii, &probes, 16, 0).unwrap().outcome.holds());
        let v = mixing_point_verdict(&sq, &PointValue::exact(rat(1, 2)), &radii, &probes, 16, 0).unwrap();
        assert!(v.outcome.fails());
        let shift = System::full_shift(2);
        let probes = vec![Region::cylinder(-1, vec![1, 0, 1]), Region::cylinder(3, vec![0, 0])];
        let x: PointValue = "(01)(01)@0".parse().unwrap();
        assert!(mixing_point_verdict(&shift, &x, &radii, &probes, 8, 0).unwrap().outcome.holds());
        assert!(transitive_point_verdict(&shift, &x, &radii, &probes, 8, 0).unwrap().outcome.holds());
    }
}
