//! Specification: tracing finitely many orbit segments separated by gaps of length `M`.

use std::collections::BTreeMap;

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sequence_from_pins, target_error, trace, trace_targets, InfeasibilityCertificate, PseudoOrbit, Strategy, TraceOutcome, TraceResult};
use crate::error::{DynError, Result};
use crate::interval::IntervalSet;
use crate::point::PointValue;
use crate::real::{int, pow2, rat, Rational, Real};
use crate::sampling::shard_seed;
use crate::symbolic::{open_agreement_radius, BiSeq, OneSidedSeq};
use crate::systems::piecewise::feasible_set;
use crate::systems::{Approx, Region, System, SystemKind};
use crate::verdict::{Verdict, Witness};

/// The orbit of `x` is followed on the closed time range `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: u64,
    pub b: u64,
    pub x: PointValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecSegments {
    pub segments: Vec<Segment>,
    pub gap: u64,
    #[serde(with = "crate::real::rational_string")]
    pub epsilon: Rational,
}

impl SpecSegments {
    pub fn validate(&self, system: &System) -> Result<()> {
        let bad = |m: &str| Err(DynError::InvalidSegments(m.into()));
        if self.segments.is_empty() {
            return bad("no segments");
        }
        if self.gap == 0 {
            return bad("gap must be positive");
        }
        if !self.epsilon.is_positive() {
            return bad("epsilon must be positive");
        }
        for (j, s) in self.segments.iter().enumerate() {
            if s.b < s.a {
                return bad(&format!("segment {j} ends before it starts"));
            }
            if j > 0 && s.a < self.segments[j - 1].b + self.gap {
                return bad(&format!("segment {j} starts less than the gap after segment {}", j - 1));
            }
            system.check_point(&s.x)?;
        }
        Ok(())
    }

    /// `(i, f^i(x_j))` for every `i` in every `[a_j, b_j]`.
    pub fn targets(&self, system: &System) -> Result<Vec<(u64, PointValue)>> {
        let mut out = Vec::new();
        for s in &self.segments {
            let mut p = system.iterate(&s.x, s.a as i64)?;
            for i in s.a..=s.b {
                if i > s.a {
                    p = system.step(&p)?;
                }
                out.push((i, p.clone()));
            }
        }
        Ok(out)
    }

    fn last(&self) -> u64 {
        self.segments.last().map_or(0, |s| s.b)
    }
}

fn is_shift(system: &System) -> bool {
    matches!(system.kind(), SystemKind::FullShift { .. } | SystemKind::OneSidedShift { .. })
}

fn symbol(p: &PointValue, n: i64) -> Result<u8> {
    match p {
        PointValue::BiSeq(s) => Ok(s.at(n)),
        PointValue::OneSided(s) if n >= 0 => Ok(s.at(n as u64)),
        _ => Err(DynError::MixedSystemPoints),
    }
}

/// Writes `x_j` over `[a_j - R, b_j + R]` and fills the rest with `0`; with `periodic` the
/// pattern repeats with period `b_k + M`.
pub fn specification_trace_symbolic(system: &System, spec: &SpecSegments, periodic: bool) -> Result<TraceResult> {
    if !is_shift(system) {
        return Err(DynError::CapabilityMissing {
            system: system.id().into(),
            capability: "exact_symbolic",
        });
    }
    spec.validate(system)?;
    let r = open_agreement_radius(&spec.epsilon).map_or(-1, |r| r as i64);
    let one_sided = matches!(system.kind(), SystemKind::OneSidedShift { .. });
    let period = spec.last() + spec.gap;
    let mut pins: BTreeMap<i64, (u8, usize)> = BTreeMap::new();
    for (j, s) in spec.segments.iter().enumerate() {
        let lo = s.a as i64 - r;
        let lo = if one_sided { lo.max(0) } else { lo };
        for n in lo..=s.b as i64 + r {
            let sym = symbol(&s.x, n)?;
            let key = if periodic { n.rem_euclid(period as i64) } else { n };
            match pins.get(&key) {
                Some(&(t, _)) if t != sym => return Err(DynError::WindowOverlap { coordinate: n }),
                Some(_) => {}
                None => {
                    pins.insert(key, (sym, j));
                }
            }
        }
    }
    let tracer = if periodic {
        let word: Vec<u8> = (0..period as i64).map(|n| pins.get(&n).map_or(0, |p| p.0)).collect();
        if one_sided {
            PointValue::OneSided(OneSidedSeq::periodic(&word))
        } else {
            PointValue::BiSeq(BiSeq::periodic(&word))
        }
    } else {
        sequence_from_pins(system, &pins, 0)
    };
    let targets = spec.targets(system)?;
    let err = target_error(system, &tracer, &targets)?;
    if !err.lt(&Real::Exact(spec.epsilon.clone())) {
        return Err(DynError::InvalidParameter(format!("symbolic tracer misses by {err}")));
    }
    Ok(TraceResult {
        tracer,
        max_error: err,
        period: periodic.then_some(period),
        strategy: Strategy::Symbolic,
    })
}

/// Builds the glued pseudo-orbit: orbit pieces on each `[a_j, b_j]` and connector orbit
/// pieces starting at `b_j + 1` that lead into the next segment. The pseudo-orbit is traced
/// at `eps / 2` and the tracer re-checked against `eps` on every segment.
pub fn specification_trace_glued(system: &System, x: &PointValue, spec: &SpecSegments, seed: u64) -> Result<TraceOutcome> {
    spec.validate(system)?;
    if spec.segments[0].x != *x {
        return Err(DynError::InvalidSegments("the first segment must start from x".into()));
    }
    let half = &spec.epsilon * rat(1, 2);
    let shift = is_shift(system);
    if !shift && system.pieces().is_err() {
        return Err(DynError::CapabilityMissing {
            system: system.id().into(),
            capability: "exact_interval_image",
        });
    }
    // Shifts: delta-pseudo-orbits with delta = 2^-R trace themselves at eps / 2.
    let (delta, r) = if shift {
        let r = open_agreement_radius(&half).unwrap_or(0);
        (pow2(-(r as i64)), r as i64)
    } else {
        (&spec.epsilon * rat(1, 4), 0)
    };
    let one_sided = matches!(system.kind(), SystemKind::OneSidedShift { .. });
    let needed = if one_sided { r as u64 + 2 } else { 2 * r as u64 + 2 };
    let first = &spec.segments[0];
    let mut points = system.orbit(x, first.b as usize)?;
    for j in 1..spec.segments.len() {
        let prev = &spec.segments[j - 1];
        let next = &spec.segments[j];
        let from = system.step(points.last().unwrap())?;
        let to = system.iterate(&next.x, next.a as i64)?;
        let len = (next.a - prev.b - 1) as usize;
        if len == 0 {
            if !system.distance(&from, &to)?.lt(&Real::Exact(delta.clone())) {
                return Err(if shift {
                    DynError::GapTooSmall { gap: spec.gap, needed }
                } else {
                    DynError::ConnectorNotFound { segment: j - 1 }
                });
            }
        } else {
            let y = if shift {
                glue_connector(system, &from, &to, len as i64, r, spec.gap, needed)?
            } else {
                interval_connector(system, &from, &to, len, &delta, j - 1)?
            };
            points.extend(system.orbit(&y, len - 1)?);
        }
        points.extend(system.orbit(&to, (next.b - next.a) as usize)?);
    }
    let po = PseudoOrbit::new(system, delta, points, Some(x.clone()))?;
    let out = trace(system, &po, &half, seed)?;
    let TraceOutcome::Traced(t) = out else {
        return Ok(out);
    };
    let targets = spec.targets(system)?;
    let err = target_error(system, &t.tracer, &targets)?;
    if !err.lt(&Real::Exact(spec.epsilon.clone())) {
        return Ok(TraceOutcome::Failed(super::TraceFailure {
            best: Some(t.tracer),
            best_error: Some(err),
            certificate: None,
        }));
    }
    Ok(TraceOutcome::Traced(TraceResult {
        tracer: t.tracer,
        max_error: err,
        period: None,
        strategy: Strategy::Glued,
    }))
}

/// A sequence agreeing with `from` on `[-r, r]` and with `to` shifted by `len` on `[len - r, len + r]`.
fn glue_connector(system: &System, from: &PointValue, to: &PointValue, len: i64, r: i64, gap: u64, needed: u64) -> Result<PointValue> {
    let lo = if matches!(from, PointValue::OneSided(_)) { 0 } else { -r };
    let mut pins: BTreeMap<i64, (u8, usize)> = BTreeMap::new();
    for c in lo..=r {
        pins.insert(c, (symbol(from, c)?, 0));
    }
    for c in lo..=r {
        let sym = symbol(to, c)?;
        match pins.get(&(len + c)) {
            Some(&(t, _)) if t != sym => return Err(DynError::GapTooSmall { gap, needed }),
            _ => {
                pins.insert(len + c, (sym, 1));
            }
        }
    }
    Ok(sequence_from_pins(system, &pins, 0))
}

/// A point `y` with `d(y, from) < delta` and `d(f^len y, to) < delta`, from the inner feasible set.
fn interval_connector(system: &System, from: &PointValue, to: &PointValue, len: usize, delta: &Rational, segment: usize) -> Result<PointValue> {
    let pieces = system.pieces()?;
    let mut constraints: Vec<Option<IntervalSet>> = vec![None; len + 1];
    constraints[0] = Some(system.region_to_intervals(&Region::ball(from.clone(), delta.clone()))?);
    constraints[len] = Some(system.region_to_intervals(&Region::ball(to.clone(), delta.clone()))?);
    let set = feasible_set(&pieces, &constraints, Approx::Inner).unwrap_or_else(IntervalSet::empty);
    for part in set.parts() {
        let y = PointValue::exact(part.midpoint());
        let ok = system.distance(&y, from)?.lt(&Real::Exact(delta.clone()))
            && system.distance(&system.iterate(&y, len as i64)?, to)?.lt(&Real::Exact(delta.clone()));
        if ok {
            return Ok(y);
        }
    }
    Err(DynError::ConnectorNotFound { segment })
}

/// How the point of a template segment is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "point", rename_all = "snake_case")]
pub enum TargetSpec {
    /// The point under test.
    Start,
    /// A seeded sample from the whole space.
    Random,
    /// A fixed point `p`: the segment follows `f^i(p)`.
    Point(PointValue),
    /// The point whose orbit is at `p` when the segment starts.
    ReachAt(PointValue),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentTemplate {
    /// `b_j - a_j`.
    pub length: u64,
    pub target: TargetSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryTemplate {
    pub segments: Vec<SegmentTemplate>,
}

impl BatteryTemplate {
    /// Places the segments back to back with gap `M`, starting at time 0.
    pub fn instantiate(&self, system: &System, x: &PointValue, gap: u64, epsilon: &Rational, seed: u64) -> Result<SpecSegments> {
        let mut segments = Vec::new();
        let mut a = 0u64;
        for (j, t) in self.segments.iter().enumerate() {
            let p = match &t.target {
                TargetSpec::Start => x.clone(),
                TargetSpec::Random => system
                    .sample(&system.whole_region(), 1, shard_seed(seed, j as u64))?
                    .pop()
                    .ok_or(DynError::EmptyRegion)?,
                TargetSpec::Point(p) => p.clone(),
                TargetSpec::ReachAt(p) => system.iterate(p, -(a as i64))?,
            };
            segments.push(Segment { a, b: a + t.length, x: p });
            a += t.length + gap;
        }
        let spec = SpecSegments {
            segments,
            gap,
            epsilon: epsilon.clone(),
        };
        spec.validate(system)?;
        Ok(spec)
    }
}

/// Segment requests used when none are supplied: on the two monotone examples they ask the
/// orbit to come back after approaching a fixed point, elsewhere they are seeded at random.
pub fn default_battery(system: &System, seed: u64) -> Vec<BatteryTemplate> {
    let seg = |length, target| SegmentTemplate { length, target };
    match system.kind() {
        SystemKind::Squaring => vec![BatteryTemplate {
            segments: vec![
                seg(0, TargetSpec::Start),
                seg(0, TargetSpec::Point(PointValue::exact(int(0)))),
                seg(0, TargetSpec::Point(PointValue::exact(int(1)))),
            ],
        }],
        SystemKind::DoublingLine { .. } => vec![BatteryTemplate {
            segments: vec![
                seg(0, TargetSpec::Start),
                seg(0, TargetSpec::ReachAt(PointValue::exact(int(1)))),
                seg(0, TargetSpec::ReachAt(PointValue::exact(rat(1, 4)))),
            ],
        }],
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..4)
                .map(|_| {
                    let k = rng.gen_range(1..=4);
                    let mut segments = vec![seg(rng.gen_range(0..=4), TargetSpec::Start)];
                    segments.extend((1..k).map(|_| seg(rng.gen_range(0..=4), TargetSpec::Random)));
                    BatteryTemplate { segments }
                })
                .collect()
        }
    }
}

enum Attempt {
    Traced,
    Certified(InfeasibilityCertificate),
    Open,
}

fn attempt(system: &System, x: &PointValue, spec: &SpecSegments, seed: u64) -> Result<Attempt> {
    if is_shift(system) {
        match specification_trace_symbolic(system, spec, false) {
            Ok(_) => return Ok(Attempt::Traced),
            Err(DynError::WindowOverlap { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if is_shift(system) || system.capabilities().compact {
        match specification_trace_glued(system, x, spec, seed) {
            Ok(TraceOutcome::Traced(_)) => return Ok(Attempt::Traced),
            Ok(_)
            | Err(DynError::GapTooSmall { .. })
            | Err(DynError::ConnectorNotFound { .. })
            | Err(DynError::CapabilityMissing { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let targets = spec.targets(system)?;
    Ok(match trace_targets(system, &targets, &spec.epsilon, seed)? {
        TraceOutcome::Traced(_) => Attempt::Traced,
        TraceOutcome::Failed(f) => match f.certificate {
            Some(c) => Attempt::Certified(c),
            None => Attempt::Open,
        },
    })
}

/// Holds at `eps` when some gap in `m_grid` makes every battery instance traceable. Fails only
/// when every gap has an instance with a certificate that no tracer exists.
pub fn specification_point_verdict(
    system: &System,
    x: &PointValue,
    eps: &Rational,
    m_grid: &[u64],
    battery: &[BatteryTemplate],
    seed: u64,
) -> Result<Verdict> {
    if m_grid.is_empty() || battery.is_empty() {
        return Err(DynError::InvalidParameter("need a gap grid and a battery".into()));
    }
    system.check_point(x)?;
    let op = "specification_point";
    let mut certified = Vec::new();
    let mut horizon = 0;
    for &m in m_grid {
        let mut all = true;
        let mut cert_here = None;
        for (t, template) in battery.iter().enumerate() {
            let spec = template.instantiate(system, x, m, eps, shard_seed(seed, t as u64))?;
            horizon = horizon.max(spec.last());
            match attempt(system, x, &spec, shard_seed(seed, t as u64))? {
                Attempt::Traced => {}
                Attempt::Certified(c) => {
                    all = false;
                    cert_here.get_or_insert((m, spec, c));
                }
                Attempt::Open => all = false,
            }
        }
        if all {
            return Ok(Verdict::holds(op, horizon, seed)
                .param("x", x)
                .param_q("epsilon", eps)
                .param("gap", m)
                .param("instances", battery.len()));
        }
        if let Some(c) = cert_here {
            certified.push(c);
        }
    }
    let v = if certified.len() == m_grid.len() {
        let (m, spec, cert) = certified.pop().unwrap();
        Verdict::fails(op, Witness::Infeasible(cert), horizon, seed)
            .param("gap", m)
            .param("segments", spec)
    } else {
        Verdict::inconclusive(op, horizon, seed)
    };
    Ok(v.param("x", x).param_q("epsilon", eps).param("gaps", m_grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shadowing::check_infeasibility;

    fn shift_spec(eps: Rational, gap: u64) -> SpecSegments {
        let x: PointValue = "(0)1101(1)@0".parse().unwrap();
        let y: PointValue = "(10)(01)@0".parse().unwrap();
        SpecSegments {
            segments: vec![Segment { a: 0, b: 3, x }, Segment { a: 3 + gap, b: 7 + gap, x: y }],
            gap,
            epsilon: eps,
        }
    }

    #[test]
    fn symbolic_tracer_and_its_period() {
        let shift = System::full_shift(2);
        let spec = shift_spec(rat(1, 4), 6);
        let t = specification_trace_symbolic(&shift, &spec, false).unwrap();
        assert!(t.max_error.lt(&Real::Exact(rat(1, 4))));
        let p = specification_trace_symbolic(&shift, &spec, true).unwrap();
        assert_eq!(p.period, Some(13 + 6));
        assert_eq!(shift.iterate(&p.tracer, 19).unwrap(), p.tracer);
        // Windows [a_j - 2, b_j + 2] collide once the gap drops below 5.
        let tight = shift_spec(rat(1, 4), 1);
        assert!(matches!(
            specification_trace_symbolic(&shift, &tight, false),
            Err(DynError::WindowOverlap { .. })
        ));
    }

    #[test]
    fn coarse_epsilon_needs_no_pins() {
        let shift = System::full_shift(2);
        let t = specification_trace_symbolic(&shift, &shift_spec(int(2), 1), false).unwrap();
        assert!(t.max_error.lt(&Real::Exact(int(2))));
    }

    #[test]
    fn glued_agrees_with_symbolic_on_windows() {
        let shift = System::full_shift(2);
        let spec = shift_spec(rat(1, 4), 8);
        let x = spec.segments[0].x.clone();
        let glued = specification_trace_glued(&shift, &x, &spec, 0).unwrap();
        let glued = glued.traced().expect("glued tracer").clone();
        let sym = specification_trace_symbolic(&shift, &spec, false).unwrap();
        for s in &spec.segments {
            for n in s.a as i64 - 2..=s.b as i64 + 2 {
                assert_eq!(symbol(&glued.tracer, n).unwrap(), symbol(&sym.tracer, n).unwrap());
            }
        }
        let short = shift_spec(rat(1, 4), 3);
        assert!(matches!(
            specification_trace_glued(&shift, &x, &short, 0),
            Err(DynError::GapTooSmall { needed: 8, .. })
        ));
    }

    #[test]
    fn single_segment_is_traced_by_its_point() {
        let sq = System::squaring();
        let x = PointValue::exact(rat(1, 2));
        let spec = SpecSegments {
            segments: vec![Segment { a: 0, b: 5, x: x.clone() }],
            gap: 1,
            epsilon: rat(1, 10),
        };
        let t = specification_trace_glued(&sq, &x, &spec, 0).unwrap();
        assert!(t.traced().unwrap().max_error.is_zero());
    }

    #[test]
    fn line_has_no_connector() {
        let line = System::doubling_line();
        let x = PointValue::exact(int(1));
        let spec = SpecSegments {
            segments: vec![
                Segment { a: 0, b: 1, x: x.clone() },
                Segment { a: 4, b: 4, x: PointValue::exact(int(0)) },
            ],
            gap: 3,
            epsilon: rat(1, 10),
        };
        let targets = spec.targets(&line).unwrap();
        let out = trace_targets(&line, &targets, &spec.epsilon, 0).unwrap();
        assert!(check_infeasibility(&line, out.certificate().unwrap()).unwrap());
    }

    #[test]
    fn example_verdicts() {
        let shift = System::full_shift(2);
        let x: PointValue = "(01)1(0)@0".parse().unwrap();
        let v = specification_point_verdict(&shift, &x, &rat(1, 4), &[6], &default_battery(&shift, 3), 3).unwrap();
        assert!(v.outcome.holds(), "{v:?}");

        let sq = System::squaring();
        let one = PointValue::exact(int(1));
        let v = specification_point_verdict(&sq, &one, &rat(1, 10), &[1, 2, 4, 8], &default_battery(&sq, 0), 0).unwrap();
        match &v.witness {
            Some(Witness::Infeasible(c)) => assert!(check_infeasibility(&sq, c).unwrap()),
            other => panic!("{other:?}"),
        }

        let line = System::doubling_line();
        let zero = PointValue::exact(int(0));
        let v = specification_point_verdict(&line, &zero, &rat(1, 10), &[1, 2, 4, 8], &default_battery(&line, 0), 0).unwrap();
        match &v.witness {
            Some(Witness::Infeasible(c)) => assert!(check_infeasibility(&line, c).unwrap()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn segments_round_trip() {
        let spec = shift_spec(rat(1, 4), 6);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<SpecSegments>(&json).unwrap(), spec);
        let mut bad = spec.clone();
        bad.segments[1].a = 5;
        assert!(matches!(bad.validate(&System::full_shift(2)), Err(DynError::InvalidSegments(_))));
    }
}
