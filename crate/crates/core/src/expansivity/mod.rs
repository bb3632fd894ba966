//! Finite-horizon dynamical balls and pointwise expansivity.
//!
//! On shifts a ball is an exact cylinder: with the dyadic metric, `d(x, y) <= delta`
//! holds iff `x` and `y` agree on `|n| <= R` where `R = ceil(log2(1/delta)) - 1`.
//! A cylinder at horizon `T` is judged by the coordinates it pins down; when the pinned
//! set grows to cover every coordinate as `T` grows, the ball shrinks to its center.

pub mod local;
pub mod measure;

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DynError, Result};
use crate::interval::{Interval, IntervalSet};
use crate::point::{PointValue, SatellitePoint, Scalar};
use crate::real::{from_f64, pow2, rat, Rational, Real};
use crate::sampling::neighbours;
use crate::symbolic::{closed_agreement_radius, parse_word, word_string, BiSeq, OneSidedSeq};
use crate::systems::{piecewise, Approx, SatelliteExtension, System, SystemKind};
use crate::verdict::{Verdict, Witness};

pub use measure::{measure_of_ball, mu_generator_check, MeasureModel, MeasureValue};

/// `2^0, 2^-1, ..., 2^-16`.
pub fn default_delta_grid() -> Vec<Rational> {
    (0..=16).map(|k| pow2(-k)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// Times `-T ..= T`.
    TwoSided { horizon: u64 },
    /// Times `0 ..= T`.
    OneSided { horizon: u64 },
    /// Times `m n` for `|n| <= T`.
    Subgroup { m: i64, horizon: u64 },
}

impl Window {
    pub fn horizon(&self) -> u64 {
        match *self {
            Window::TwoSided { horizon } | Window::OneSided { horizon } | Window::Subgroup { horizon, .. } => horizon,
        }
    }

    pub fn times(&self) -> Vec<i64> {
        match *self {
            Window::TwoSided { horizon } => (-(horizon as i64)..=horizon as i64).collect(),
            Window::OneSided { horizon } => (0..=horizon as i64).collect(),
            Window::Subgroup { m, horizon } => (-(horizon as i64)..=horizon as i64).map(|n| m * n).collect(),
        }
    }

    fn needs_inverse(&self) -> bool {
        !matches!(self, Window::OneSided { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderRun {
    pub start: i64,
    #[serde(with = "word_str")]
    pub word: Vec<u8>,
}

mod word_str {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &[u8], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&word_string(w))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        parse_word(&s).map_err(serde::de::Error::custom)
    }
}

/// Sequences whose coordinates on each run spell the run's word.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderSet {
    pub runs: Vec<CylinderRun>,
}

impl CylinderSet {
    /// The cylinder pinning `coords` to the symbols of `symbol_at`.
    pub fn pinned(coords: &BTreeSet<i64>, symbol_at: impl Fn(i64) -> u8) -> Self {
        let mut runs: Vec<CylinderRun> = Vec::new();
        for &c in coords {
            match runs.last_mut() {
                Some(r) if r.start + r.word.len() as i64 == c => r.word.push(symbol_at(c)),
                _ => runs.push(CylinderRun {
                    start: c,
                    word: vec![symbol_at(c)],
                }),
            }
        }
        CylinderSet { runs }
    }

    pub fn constraints(&self) -> Vec<(i64, u8)> {
        self.runs
            .iter()
            .flat_map(|r| r.word.iter().enumerate().map(move |(i, &s)| (r.start + i as i64, s)))
            .collect()
    }

    pub fn constrained_count(&self) -> usize {
        self.runs.iter().map(|r| r.word.len()).sum()
    }

    pub fn is_constrained(&self, c: i64) -> bool {
        self.runs
            .iter()
            .any(|r| c >= r.start && c < r.start + r.word.len() as i64)
    }

    pub fn contains(&self, p: &PointValue) -> bool {
        self.constraints().into_iter().all(|(c, s)| match p {
            PointValue::BiSeq(q) => q.at(c) == s,
            PointValue::OneSided(q) => c >= 0 && q.at(c as u64) == s,
            _ => false,
        })
    }

    /// `self ⊆ other`: every constraint of `other` is also imposed, with the same symbol, by `self`.
    pub fn is_subset_of(&self, other: &CylinderSet) -> bool {
        let mine: std::collections::BTreeMap<i64, u8> = self.constraints().into_iter().collect();
        other
            .constraints()
            .into_iter()
            .all(|(c, s)| mine.get(&c) == Some(&s))
    }
}

/// All satellite points `q(copy, k, phase)` with `k >= min_level`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatelliteFamily {
    pub copy: u8,
    pub phase: u32,
    pub min_level: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BallRepr {
    Cylinder {
        cylinder: CylinderSet,
        /// The pinned coordinates exhaust the index set as the horizon grows.
        shrinks_to_center: bool,
    },
    /// Candidates that passed the horizon test. `exhaustive` when every point of the ball
    /// was examined; `unbounded` when the ball is known to hold infinitely many points.
    Explicit {
        points: Vec<PointValue>,
        exhaustive: bool,
        unbounded: bool,
    },
    /// Base points near `base_center` (as a cylinder of the base system), finitely many
    /// listed satellite points, and infinite satellite families.
    Satellite {
        base_center: Option<PointValue>,
        base: Option<CylinderSet>,
        base_shrinks: bool,
        points: Vec<PointValue>,
        families: Vec<SatelliteFamily>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicalBall {
    pub center: PointValue,
    #[serde(with = "crate::real::rational_string")]
    pub radius: Rational,
    pub window: Window,
    pub repr: BallRepr,
    /// Inner enclosure of the ball for interval maps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified: Option<IntervalSet>,
}

/// First time in `times` with `d(f^n x, f^n y) > delta`, with that distance.
pub fn horizon_violation(
    system: &System,
    x: &PointValue,
    y: &PointValue,
    delta: &Real,
    times: &[i64],
) -> Result<Option<(i64, Real)>> {
    let xs = orbit_at(system, x, times)?;
    let ys = orbit_at(system, y, times)?;
    for ((t, a), b) in times.iter().zip(&xs).zip(&ys) {
        let d = system.distance(a, b)?;
        if !d.le(delta) {
            return Ok(Some((*t, d)));
        }
    }
    Ok(None)
}

/// `f^t(p)` for each `t` in `times` (any order), stepping outward from time 0.
pub fn orbit_at(system: &System, p: &PointValue, times: &[i64]) -> Result<Vec<PointValue>> {
    let max = times.iter().copied().max().unwrap_or(0).max(0);
    let min = times.iter().copied().min().unwrap_or(0).min(0);
    let mut fwd = vec![p.clone()];
    for _ in 0..max {
        let next = system.iterate(fwd.last().unwrap(), 1)?;
        fwd.push(next);
    }
    let mut bwd = vec![p.clone()];
    for _ in 0..(-min) {
        let next = system.iterate(bwd.last().unwrap(), -1)?;
        bwd.push(next);
    }
    Ok(times
        .iter()
        .map(|&t| {
            if t >= 0 {
                fwd[t as usize].clone()
            } else {
                bwd[(-t) as usize].clone()
            }
        })
        .collect())
}

impl DynamicalBall {
    /// Direct horizon test `d(f^n center, f^n y) <= radius` for every window time.
    pub fn admits(&self, system: &System, y: &PointValue) -> Result<bool> {
        Ok(horizon_violation(system, &self.center, y, &Real::Exact(self.radius.clone()), &self.window.times())?.is_none())
    }

    /// Whether the ball pins down its center alone: no other represented point, and any
    /// cylinder part shrinks to its center as the horizon grows.
    pub fn isolates_center(&self) -> bool {
        match &self.repr {
            BallRepr::Cylinder { shrinks_to_center, .. } => *shrinks_to_center,
            BallRepr::Explicit { points, unbounded, .. } => {
                !unbounded && points.iter().all(|p| *p == self.center)
                    && self.certified.as_ref().map_or(true, |c| !has_interior(c))
            }
            BallRepr::Satellite {
                base_center,
                base,
                base_shrinks,
                points,
                families,
            } => {
                let base_ok = base.is_none()
                    || (*base_shrinks && base_center.as_ref().map_or(true, |c| *c == self.center));
                base_ok && points.is_empty() && families.is_empty()
            }
        }
    }

    /// A point of the ball other than the center, when one is known.
    pub fn other_point(&self, system: &System) -> Option<PointValue> {
        match &self.repr {
            BallRepr::Cylinder { cylinder, .. } => flip_free_coordinate(system, &self.center, cylinder),
            BallRepr::Explicit { points, .. } => points
                .iter()
                .find(|p| **p != self.center)
                .cloned()
                .or_else(|| self.certified.as_ref().and_then(|c| interior_point(c, &self.center))),
            BallRepr::Satellite {
                base_center,
                base,
                points,
                families,
                ..
            } => {
                if let Some(f) = families.first() {
                    let (copy, level, phase) = match &self.center {
                        PointValue::Satellite(SatellitePoint::Orbit { copy, level, phase }) => {
                            (*copy, *level, *phase)
                        }
                        _ => (0, 0, 0),
                    };
                    let mut k = f.min_level;
                    if (f.copy, k, f.phase) == (copy, level, phase) {
                        k += 1;
                    }
                    return Some(PointValue::orbit_point(f.copy, k, f.phase));
                }
                if let Some(p) = points.first() {
                    return Some(p.clone());
                }
                let sat = system.satellite()?;
                let bc = base_center.clone()?;
                let PointValue::Satellite(SatellitePoint::Base(inner)) = &bc else {
                    return None;
                };
                if bc != self.center {
                    return Some(bc.clone());
                }
                let cyl = base.as_ref()?;
                flip_free_coordinate(sat.base(), inner, cyl).map(PointValue::base_point)
            }
        }
    }
}

fn has_interior(set: &IntervalSet) -> bool {
    set.parts().iter().any(|p| p.lo < p.hi)
}

fn interior_point(set: &IntervalSet, center: &PointValue) -> Option<PointValue> {
    let part = set.parts().iter().find(|p| p.lo < p.hi)?;
    let mid = part.midpoint();
    let q = if *center == PointValue::exact(mid.clone()) {
        (&part.lo + &mid) / rat(2, 1)
    } else {
        mid
    };
    Some(PointValue::exact(q))
}

fn flip_free_coordinate(system: &System, center: &PointValue, cyl: &CylinderSet) -> Option<PointValue> {
    let alphabet = system.alphabet()?;
    match center {
        PointValue::BiSeq(s) => {
            let c = (0i64..).flat_map(|n| [n, -n]).find(|&c| !cyl.is_constrained(c))?;
            Some(PointValue::BiSeq(s.with_symbol(c, (s.at(c) + 1) % alphabet)))
        }
        PointValue::OneSided(s) => {
            let c = (0i64..).find(|&c| !cyl.is_constrained(c))? as u64;
            Some(PointValue::OneSided(s.with_window(c, &[(s.at(c) + 1) % alphabet])))
        }
        _ => None,
    }
}

fn check_delta(delta: &Rational) -> Result<()> {
    if delta.is_positive() {
        Ok(())
    } else {
        Err(DynError::InvalidParameter("delta must be positive".into()))
    }
}

/// Horizon-`T` approximation of `Gamma_delta(x)` over the given window.
pub fn gamma_ball(
    system: &System,
    x: &PointValue,
    delta: &Rational,
    window: Window,
    budget: usize,
    seed: u64,
) -> Result<DynamicalBall> {
    check_delta(delta)?;
    system.check_point(x)?;
    if window.needs_inverse() && !system.capabilities().invertible {
        return Err(DynError::NonInvertibleTwoSided);
    }
    if let Window::Subgroup { m: 0, .. } = window {
        return Err(DynError::InvalidParameter("subgroup generator m must be non-zero".into()));
    }
    let times = window.times();
    let (repr, certified) = match (system.kind(), x) {
        (SystemKind::FullShift { .. }, PointValue::BiSeq(s)) => (shift_cylinder(s, delta, &window), None),
        (SystemKind::OneSidedShift { .. }, PointValue::OneSided(s)) => (one_sided_cylinder(s, delta, &window), None),
        (SystemKind::Satellite(sat), PointValue::Satellite(sp)) => (satellite_ball(sat, sp, delta, &window)?, None),
        _ => {
            let cands = neighbours(system, x, delta, budget, seed)?;
            let d = Real::Exact(delta.clone());
            let mut points = Vec::new();
            for y in cands {
                if horizon_violation(system, x, &y, &d, &times)?.is_none() {
                    points.push(y);
                }
            }
            let (exhaustive, unbounded) = match (system.kind(), x) {
                (SystemKind::Ladder { .. }, PointValue::Ladder(l)) => {
                    let limit = !matches!(l, crate::point::LadderPoint::Rung(_));
                    (!limit, limit)
                }
                _ => (false, false),
            };
            let certified = interval_inner_ball(system, x, delta, &times)?;
            (
                BallRepr::Explicit {
                    points,
                    exhaustive,
                    unbounded,
                },
                certified,
            )
        }
    };
    Ok(DynamicalBall {
        center: x.clone(),
        radius: delta.clone(),
        window,
        repr,
        certified,
    })
}

/// Horizon-`T` approximation of `Phi_delta(x)` (times `0..=T`).
pub fn phi_ball(
    system: &System,
    x: &PointValue,
    delta: &Rational,
    horizon: u64,
    budget: usize,
    seed: u64,
) -> Result<DynamicalBall> {
    gamma_ball(system, x, delta, Window::OneSided { horizon }, budget, seed)
}

/// Ball over the times `m n`, `|n| <= T`.
pub fn gamma_subgroup_ball(
    system: &System,
    x: &PointValue,
    delta: &Rational,
    m: i64,
    horizon: u64,
    budget: usize,
    seed: u64,
) -> Result<DynamicalBall> {
    gamma_ball(system, x, delta, Window::Subgroup { m, horizon }, budget, seed)
}

fn shift_cylinder(s: &BiSeq, delta: &Rational, window: &Window) -> BallRepr {
    let Some(r) = closed_agreement_radius(delta) else {
        return BallRepr::Cylinder {
            cylinder: CylinderSet::default(),
            shrinks_to_center: false,
        };
    };
    let r = r as i64;
    let mut coords = BTreeSet::new();
    for t in window.times() {
        coords.extend(t - r..=t + r);
    }
    let shrinks = match *window {
        Window::TwoSided { .. } => true,
        Window::Subgroup { m, .. } => 2 * r + 1 >= m.abs(),
        Window::OneSided { .. } => false,
    };
    BallRepr::Cylinder {
        cylinder: CylinderSet::pinned(&coords, |c| s.at(c)),
        shrinks_to_center: shrinks,
    }
}

fn one_sided_cylinder(s: &OneSidedSeq, delta: &Rational, window: &Window) -> BallRepr {
    let Some(r) = closed_agreement_radius(delta) else {
        return BallRepr::Cylinder {
            cylinder: CylinderSet::default(),
            shrinks_to_center: false,
        };
    };
    let r = r as i64;
    let mut coords = BTreeSet::new();
    for t in window.times().into_iter().filter(|&t| t >= 0) {
        coords.extend(t..=t + r);
    }
    BallRepr::Cylinder {
        cylinder: CylinderSet::pinned(&coords, |c| s.at(c as u64)),
        shrinks_to_center: true,
    }
}

/// `max_n d0(g^(n+a) p, g^(n+b) p)` over the window; it only depends on `n mod t`.
fn phase_gap(sat: &SatelliteExtension, a: u32, b: u32, times: &[i64]) -> Result<Rational> {
    let t = sat.period() as i64;
    let mut best = Rational::zero();
    let mut seen = BTreeSet::new();
    for &n in times {
        let r = n.rem_euclid(t);
        if !seen.insert(r) {
            continue;
        }
        let pa = sat.phase_point(((a as i64 + r) % t) as u32);
        let pb = sat.phase_point(((b as i64 + r) % t) as u32);
        let d = sat.base().distance(pa, pb)?;
        best = best.max(d.exact().cloned().unwrap_or_else(Rational::zero));
    }
    Ok(best)
}

/// Levels `k` with `1/k <= room`, or `None` if there are none.
fn min_level(room: &Rational) -> Option<u64> {
    if !room.is_positive() {
        return None;
    }
    let k = (Rational::one() / room).ceil().to_integer();
    Some(k.try_into().unwrap_or(u64::MAX))
}

fn satellite_ball(sat: &SatelliteExtension, sp: &SatellitePoint, delta: &Rational, window: &Window) -> Result<BallRepr> {
    let times = window.times();
    let base_sys = sat.base();
    let mut points = Vec::new();
    let mut families = Vec::new();
    let (base_center, base_radius) = match sp {
        SatellitePoint::Base(b) => {
            // q(l, m, r) follows the orbit of g^r p at extra distance 1/m.
            let s = (**b).clone();
            for r in 0..sat.period() {
                let mut worst = Rational::zero();
                let ys = orbit_at(base_sys, &s, &times)?;
                let ps = orbit_at(base_sys, sat.phase_point(r), &times)?;
                for (y, p) in ys.iter().zip(&ps) {
                    worst = worst.max(base_sys.distance(y, p)?.exact().cloned().unwrap_or_else(Rational::zero));
                }
                if let Some(k) = min_level(&(delta - worst)) {
                    for copy in 1..=3 {
                        families.push(SatelliteFamily { copy, phase: r, min_level: k });
                    }
                }
            }
            (s, delta.clone())
        }
        SatellitePoint::Orbit { copy, level, phase } => {
            let inv_k = rat(1, *level as i64);
            for l in 1..=3u8 {
                for r in 0..sat.period() {
                    let gap = phase_gap(sat, *phase, r, &times)?;
                    let room = delta - &inv_k - gap;
                    if let Some(k) = min_level(&room) {
                        families.push(SatelliteFamily { copy: l, phase: r, min_level: k });
                    }
                }
            }
            // Sibling copies at the same level and phase stay at distance exactly 1/k.
            if inv_k <= *delta {
                for l in (1..=3u8).filter(|l| l != copy) {
                    let covered = families
                        .iter()
                        .any(|f| f.copy == l && f.phase == *phase && f.min_level <= *level);
                    if !covered {
                        points.push(PointValue::orbit_point(l, *level, *phase));
                    }
                }
            }
            (sat.phase_point(*phase).clone(), delta - inv_k)
        }
    };
    let (base, base_shrinks, base_center) = if base_radius.is_negative() {
        (None, true, None)
    } else if base_radius.is_zero() {
        (Some(CylinderSet::default()), true, Some(PointValue::base_point(base_center)))
    } else {
        let ball = gamma_ball(base_sys, &base_center, &base_radius, *window, 0, 0)?;
        match ball.repr {
            BallRepr::Cylinder {
                cylinder,
                shrinks_to_center,
            } => (Some(cylinder), shrinks_to_center, Some(PointValue::base_point(base_center))),
            _ => unreachable!("satellite bases are shifts"),
        }
    };
    Ok(BallRepr::Satellite {
        base_center,
        base,
        base_shrinks,
        points,
        families,
    })
}

/// Certified inner enclosure of `{y : |f^n y - f^n x| <= delta, 0 <= n <= T}` for
/// interval maps. Negative times add nothing for the invertible interval maps here.
fn interval_inner_ball(system: &System, x: &PointValue, delta: &Rational, times: &[i64]) -> Result<Option<IntervalSet>> {
    let Ok(pieces) = system.pieces() else {
        return Ok(None);
    };
    if matches!(system.kind(), SystemKind::DoublingCircle) {
        return Ok(None);
    }
    let c = match x {
        PointValue::Scalar(Scalar::Exact(q)) => q.clone(),
        PointValue::Scalar(Scalar::Float(f)) => from_f64(*f)?,
        _ => return Ok(None),
    };
    let dom = system.domain_interval().expect("interval maps have domains");
    let horizon = times.iter().copied().max().unwrap_or(0).max(0) as usize;
    let mut constraints = Vec::with_capacity(horizon + 1);
    let mut enclosure = Interval::point(c);
    for n in 0..=horizon {
        if n > 0 {
            enclosure = match piecewise::enclose(&pieces, &enclosure) {
                Some(e) => e,
                None => return Ok(None),
            };
        }
        let inner = Interval::closed(&enclosure.hi - delta, &enclosure.lo + delta)
            .and_then(|iv| iv.intersect(&dom));
        match inner {
            Some(iv) => constraints.push(Some(IntervalSet::single(iv))),
            None => return Ok(Some(IntervalSet::empty())),
        }
    }
    Ok(piecewise::feasible_set(&pieces, &constraints, Approx::Inner))
}

fn default_window(system: &System, horizon: u64) -> Window {
    if system.capabilities().invertible {
        Window::TwoSided { horizon }
    } else {
        Window::OneSided { horizon }
    }
}

/// Largest grid `delta` whose horizon-`T` ball isolates `x`.
pub fn pointwise_expansivity_verdict(
    system: &System,
    x: &PointValue,
    delta_grid: &[Rational],
    horizon: u64,
    budget: usize,
    seed: u64,
) -> Result<(Option<Rational>, Verdict)> {
    if delta_grid.is_empty() {
        return Err(DynError::InvalidParameter("empty delta grid".into()));
    }
    let window = default_window(system, horizon);
    let mut witness = None;
    for delta in delta_grid {
        let ball = gamma_ball(system, x, delta, window, budget, seed)?;
        if ball.isolates_center() {
            let v = Verdict::holds("pointwise_expansivity", horizon, seed)
                .param("x", x)
                .param_q("delta_x", delta)
                .param("window", window);
            return Ok((Some(delta.clone()), v));
        }
        if let Some(y) = ball.other_point(system) {
            let d = system.distance(x, &y)?;
            witness = Some((delta.clone(), y, d));
        }
    }
    let v = match witness {
        Some((delta, y, d)) => Verdict::fails(
            "pointwise_expansivity",
            Witness::Point {
                point: y,
                index: None,
                distance: Some(d),
            },
            horizon,
            seed,
        )
        .param_q("smallest_delta", &delta),
        None => Verdict::inconclusive("pointwise_expansivity", horizon, seed),
    };
    Ok((None, v.param("x", x).param("window", window)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "count", rename_all = "snake_case")]
pub enum Cardinality {
    Exact(u64),
    Infinite,
    AtLeast(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardinalityReport {
    pub cardinality: Cardinality,
    /// Points of the ball other than the center, when finitely many are known.
    pub others: Vec<PointValue>,
    /// `min_i d(x, y_i)` over the other points, or `delta` when there are none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_x: Option<Real>,
}

/// `|Gamma_delta(x)|` at horizon `T`, with the derived expansivity constant when finite.
pub fn n_expansive_cardinality(
    system: &System,
    x: &PointValue,
    delta: &Rational,
    horizon: u64,
    budget: usize,
    seed: u64,
) -> Result<CardinalityReport> {
    check_delta(delta)?;
    let ball = gamma_ball(system, x, delta, default_window(system, horizon), budget, seed)?;
    let infinite = || CardinalityReport {
        cardinality: Cardinality::Infinite,
        others: Vec::new(),
        epsilon_x: None,
    };
    let others: Vec<PointValue> = match &ball.repr {
        BallRepr::Cylinder { shrinks_to_center, .. } => {
            if !shrinks_to_center {
                return Ok(infinite());
            }
            Vec::new()
        }
        BallRepr::Explicit {
            points,
            exhaustive,
            unbounded,
        } => {
            if *unbounded || ball.certified.as_ref().is_some_and(has_interior) {
                return Ok(infinite());
            }
            let others: Vec<PointValue> = points.iter().filter(|p| **p != *x).cloned().collect();
            if !exhaustive {
                return Ok(CardinalityReport {
                    cardinality: Cardinality::AtLeast(others.len() as u64 + 1),
                    others,
                    epsilon_x: None,
                });
            }
            others
        }
        BallRepr::Satellite {
            base_center,
            base_shrinks,
            points,
            families,
            base,
        } => {
            if !families.is_empty() || (base.is_some() && !base_shrinks) {
                return Ok(infinite());
            }
            let mut v = points.clone();
            if let Some(bc) = base_center {
                if bc != x {
                    v.push(bc.clone());
                }
            }
            v
        }
    };
    let mut eps: Option<Real> = None;
    for y in &others {
        let d = system.distance(x, y)?;
        eps = Some(match eps {
            None => d,
            Some(e) => e.min(d),
        });
    }
    Ok(CardinalityReport {
        cardinality: Cardinality::Exact(others.len() as u64 + 1),
        epsilon_x: Some(eps.unwrap_or_else(|| Real::Exact(delta.clone()))),
        others,
    })
}

/// The inclusions around a ball taken along the subgroup `mZ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupContainment {
    /// Radius from uniform continuity: `d(a, b) <= epsilon` forces `d(f^i a, f^i b) <= delta` for `|i| <= |m|`.
    #[serde(with = "crate::real::rational_string")]
    pub epsilon: Rational,
    /// `Gamma^{mZ}_epsilon` at horizon `T` lies inside `Gamma_delta` at horizon `|m| T`.
    pub subgroup_inside_full: bool,
    /// `Gamma_epsilon` at horizon `|m| T` lies inside `Gamma^{mZ}_delta` at horizon `T`.
    pub full_inside_subgroup: bool,
}

/// Checks both inclusions between full and subgroup balls as cylinder sets (shifts only).
pub fn subgroup_containment(
    system: &System,
    x: &PointValue,
    delta: &Rational,
    m: i64,
    horizon: u64,
) -> Result<SubgroupContainment> {
    check_delta(delta)?;
    if !matches!(system.kind(), SystemKind::FullShift { .. }) {
        return Err(DynError::CapabilityMissing {
            system: system.id().into(),
            capability: "exact_symbolic",
        });
    }
    if m == 0 {
        return Err(DynError::InvalidParameter("subgroup generator m must be non-zero".into()));
    }
    let epsilon = match closed_agreement_radius(delta) {
        None => delta.clone(),
        Some(r) => pow2(-(r as i64 + m.abs() + 1)),
    };
    let full_t = m.unsigned_abs() * horizon;
    let cyl = |b: DynamicalBall| match b.repr {
        BallRepr::Cylinder { cylinder, .. } => cylinder,
        _ => unreachable!("shift balls are cylinders"),
    };
    let sub_eps = cyl(gamma_subgroup_ball(system, x, &epsilon, m, horizon, 0, 0)?);
    let full_delta = cyl(gamma_ball(system, x, delta, Window::TwoSided { horizon: full_t }, 0, 0)?);
    let full_eps = cyl(gamma_ball(system, x, &epsilon, Window::TwoSided { horizon: full_t }, 0, 0)?);
    let sub_delta = cyl(gamma_subgroup_ball(system, x, delta, m, horizon, 0, 0)?);
    Ok(SubgroupContainment {
        epsilon,
        subgroup_inside_full: sub_eps.is_subset_of(&full_delta),
        full_inside_subgroup: full_eps.is_subset_of(&sub_delta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::LadderPoint;
    use crate::real::int;
    use crate::systems::words;

    fn x0() -> PointValue {
        PointValue::BiSeq(BiSeq::new(vec![1, 0], vec![1, 1, 0, 1], vec![0, 0, 1], -2).unwrap())
    }

    fn cylinder(ball: &DynamicalBall) -> &CylinderSet {
        match &ball.repr {
            BallRepr::Cylinder { cylinder, .. } => cylinder,
            _ => panic!("expected a cylinder"),
        }
    }

    #[test]
    fn half_radius_pins_coordinate_zero() {
        let shift = System::full_shift(2);
        let b = gamma_ball(&shift, &x0(), &rat(1, 2), Window::TwoSided { horizon: 0 }, 0, 0).unwrap();
        let c = cylinder(&b);
        assert_eq!(c.constraints().iter().map(|p| p.0).collect::<Vec<_>>(), vec![0]);
        let b = gamma_ball(&shift, &x0(), &rat(1, 2), Window::TwoSided { horizon: 12 }, 0, 0).unwrap();
        assert_eq!(cylinder(&b).constrained_count(), 25);
    }

    #[test]
    fn one_sided_phi_ball() {
        let s = System::one_sided_shift(2);
        let x: PointValue = "0110(10)".parse().unwrap();
        let b = phi_ball(&s, &x, &rat(1, 2), 4, 0, 0).unwrap();
        let coords: Vec<i64> = cylinder(&b).constraints().iter().map(|p| p.0).collect();
        assert_eq!(coords, (0..=4).collect::<Vec<_>>());
        let b = phi_ball(&s, &x, &rat(1, 4), 4, 0, 0).unwrap();
        assert_eq!(cylinder(&b).constrained_count(), 6);
    }

    #[test]
    fn cylinder_matches_brute_force_window() {
        // Every word on |n| <= W decides the horizon test when the window is wide enough.
        let shift = System::full_shift(2);
        let x = x0();
        for (t, delta) in [(0u64, rat(1, 2)), (1, rat(1, 4)), (2, rat(1, 8))] {
            let b = gamma_ball(&shift, &x, &delta, Window::TwoSided { horizon: t }, 0, 0).unwrap();
            let w = 5i64;
            for word in words(2, (2 * w + 1) as usize).unwrap() {
                let y = PointValue::BiSeq(x.as_biseq().unwrap().with_window(-w, &word));
                assert_eq!(b.admits(&shift, &y).unwrap(), cylinder(&b).contains(&y));
            }
        }
    }

    #[test]
    fn shift_is_expansive_at_half() {
        let shift = System::full_shift(2);
        let (d, v) = pointwise_expansivity_verdict(&shift, &x0(), &default_delta_grid(), 6, 8, 1).unwrap();
        assert_eq!(d, Some(rat(1, 2)));
        assert!(v.outcome.holds());
    }

    #[test]
    fn satellite_anchor_is_not_expansive() {
        let sys = System::default_satellite_extension();
        let p = PointValue::base_point(PointValue::BiSeq(BiSeq::periodic(&[0, 1])));
        let (d, v) = pointwise_expansivity_verdict(&sys, &p, &default_delta_grid(), 6, 16, 2).unwrap();
        assert_eq!(d, None);
        match v.witness {
            Some(Witness::Point {
                point: PointValue::Satellite(SatellitePoint::Orbit { .. }),
                ..
            }) => {}
            other => panic!("expected a satellite witness, got {other:?}"),
        }
        let y = PointValue::base_point(PointValue::BiSeq(BiSeq::constant(0)));
        let (d, _) = pointwise_expansivity_verdict(&sys, &y, &default_delta_grid(), 6, 16, 2).unwrap();
        assert_eq!(d, Some(rat(1, 2)));
    }

    #[test]
    fn satellite_ball_contains_three_copies_per_level() {
        let sys = System::default_satellite_extension();
        let p = PointValue::base_point(PointValue::BiSeq(BiSeq::periodic(&[0, 1])));
        let k = 8u64;
        let b = gamma_ball(&sys, &p, &rat(1, k as i64), Window::TwoSided { horizon: 6 }, 0, 0).unwrap();
        for copy in 1..=3 {
            let q = PointValue::orbit_point(copy, k, 0);
            assert!(b.admits(&sys, &q).unwrap());
            match &b.repr {
                BallRepr::Satellite { families, .. } => assert!(families
                    .iter()
                    .any(|f| f.copy == copy && f.phase == 0 && f.min_level <= k)),
                _ => panic!(),
            }
        }
        assert!(!b.admits(&sys, &PointValue::orbit_point(1, k - 1, 0)).unwrap());
    }

    #[test]
    fn ladder_halves() {
        let x_sys = System::tanh_ladder(true);
        let a = PointValue::Ladder(LadderPoint::Upper);
        let (d, v) = pointwise_expansivity_verdict(&x_sys, &a, &default_delta_grid(), 3, 8, 0).unwrap();
        assert_eq!(d, None);
        assert!(v.outcome.fails());
        let y_sys = System::tanh_ladder(false);
        let x5 = PointValue::Ladder(LadderPoint::Rung(5));
        let (d, _) = pointwise_expansivity_verdict(&y_sys, &x5, &default_delta_grid(), 3, 8, 0).unwrap();
        let d = d.expect("isolated rung");
        assert!(crate::real::to_f64(&d) < (6f64.tanh() - 5f64.tanh()));
        let card = n_expansive_cardinality(&x_sys, &a, &rat(1, 10), 2, 8, 0).unwrap();
        assert_eq!(card.cardinality, Cardinality::Infinite);
    }

    #[test]
    fn squaring_phi_ball_has_interior() {
        let sq = System::squaring();
        let b = phi_ball(&sq, &PointValue::exact(int(0)), &rat(1, 10), 8, 16, 4).unwrap();
        let inner = b.certified.clone().unwrap();
        assert!(has_interior(&inner));
        for p in inner.parts() {
            assert!(b.admits(&sq, &PointValue::exact(p.midpoint())).unwrap());
        }
        let huge = phi_ball(&sq, &PointValue::exact(rat(1, 2)), &int(2), 3, 16, 4).unwrap();
        match huge.repr {
            BallRepr::Explicit { points, .. } => assert!(points.len() >= 8),
            _ => panic!(),
        }
    }

    #[test]
    fn two_sided_needs_inverse() {
        let sq = System::squaring();
        let r = gamma_ball(&sq, &PointValue::exact(int(0)), &rat(1, 2), Window::TwoSided { horizon: 1 }, 4, 0);
        assert!(matches!(r, Err(DynError::NonInvertibleTwoSided)));
        assert!(matches!(
            n_expansive_cardinality(&sq, &PointValue::exact(int(0)), &int(0), 1, 4, 0),
            Err(DynError::InvalidParameter(_))
        ));
    }

    #[test]
    fn subgroup_inclusions() {
        let shift = System::full_shift(2);
        for m in [1, 2, 3] {
            for t in 0..=6 {
                let c = subgroup_containment(&shift, &x0(), &rat(1, 2), m, t).unwrap();
                assert!(c.subgroup_inside_full && c.full_inside_subgroup, "m={m} t={t}");
            }
        }
        let a = gamma_ball(&shift, &x0(), &rat(1, 4), Window::TwoSided { horizon: 3 }, 0, 0).unwrap();
        let b = gamma_subgroup_ball(&shift, &x0(), &rat(1, 4), 1, 3, 0, 0).unwrap();
        assert_eq!(a.repr, b.repr);
    }

    #[test]
    fn cardinality_reduction() {
        let sys = System::default_satellite_extension();
        let q = PointValue::orbit_point(1, 4, 0);
        let rep = n_expansive_cardinality(&sys, &q, &rat(1, 4), 4, 0, 0).unwrap();
        assert_eq!(rep.cardinality, Cardinality::Exact(4));
        let eps = rep.epsilon_x.unwrap().exact().cloned().unwrap();
        assert_eq!(eps, rat(1, 4));
        let half = n_expansive_cardinality(&sys, &q, &(eps / int(2)), 4, 0, 0).unwrap();
        assert_eq!(half.cardinality, Cardinality::Exact(1));
    }
}
