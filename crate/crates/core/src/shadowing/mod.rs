//! Pseudo-orbits, tracers and shadowable points.
//!
//! Tracing is posed as a list of targets `(i, t_i)` with the requirement
//! `d(f^i z, t_i) < eps`. Shifts solve it exactly by writing coordinates, interval maps by
//! propagating constraint sets, and everything else by a seeded candidate search.

pub mod mixing;
pub mod spec;

use std::collections::BTreeMap;

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DynError, Result};
use crate::interval::{Interval, IntervalSet};
use crate::point::{PointValue, Scalar};
use crate::real::{from_f64, rat, round_down, Rational, Real};
use crate::sampling::{neighbours, shard_seed};
use crate::symbolic::{open_agreement_radius, BiSeq, OneSidedSeq};
use crate::systems::piecewise::{self, forward_outer};
use crate::systems::{Approx, Region, System, SystemKind};
use crate::verdict::{Verdict, Witness};

pub use mixing::{
    check_escape, default_probes, mixing_point_verdict, mixing_transition_time, transitive_point_verdict, EscapeCertificate, Transition,
};
pub use spec::{
    default_battery, specification_point_verdict, specification_trace_glued, specification_trace_symbolic,
    BatteryTemplate, Segment, SegmentTemplate, SpecSegments, TargetSpec,
};

/// Fractional bits kept by perturbed scalar pseudo-orbits.
const PERTURB_BITS: u32 = 48;
/// Candidates examined by the search tracer.
pub const SEARCH_BUDGET: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    #[serde(with = "crate::real::rational_string")]
    pub delta: Rational,
    pub points: Vec<PointValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub through: Option<PointValue>,
}

impl PseudoOrbit {
    /// Validates `d(f(x_i), x_{i+1}) < delta` for every step.
    pub fn new(system: &System, delta: Rational, points: Vec<PointValue>, through: Option<PointValue>) -> Result<Self> {
        let po = PseudoOrbit { delta, points, through };
        po.validate(system)?;
        Ok(po)
    }

    pub fn validate(&self, system: &System) -> Result<()> {
        if !self.delta.is_positive() {
            return Err(DynError::InvalidParameter("delta must be positive".into()));
        }
        if self.points.len() < 2 {
            return Err(DynError::InvalidParameter("pseudo-orbits need at least two points".into()));
        }
        if let Some(t) = &self.through {
            if *t != self.points[0] {
                return Err(DynError::InvalidPseudoOrbit { index: 0 });
            }
        }
        let d = Real::Exact(self.delta.clone());
        for (i, p) in self.points.iter().enumerate() {
            system.check_point(p)?;
            if i + 1 < self.points.len() {
                let fx = system.step(p)?;
                if !system.distance(&fx, &self.points[i + 1])?.lt(&d) {
                    return Err(DynError::InvalidPseudoOrbit { index: i });
                }
            }
        }
        Ok(())
    }

    fn targets(&self) -> Vec<(u64, PointValue)> {
        self.points.iter().enumerate().map(|(i, p)| (i as u64, p.clone())).collect()
    }
}

/// A `delta`-pseudo-orbit through `x`: each true image moved by less than `delta / 2`.
pub fn perturbed_orbit(system: &System, x: &PointValue, delta: &Rational, length: usize, seed: u64) -> Result<PseudoOrbit> {
    if !delta.is_positive() || length < 2 {
        return Err(DynError::InvalidParameter("need delta > 0 and length >= 2".into()));
    }
    system.check_point(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quarter = delta * rat(1, 4);
    let half = Real::Exact(delta * rat(1, 2));
    let scalar = matches!(x, PointValue::Scalar(_));
    let mut points = vec![x.clone()];
    for i in 1..length {
        let fx = system.step(&points[i - 1])?;
        let mut cands = vec![fx.clone()];
        cands.extend(neighbours(system, &fx, &quarter, 8, shard_seed(seed, i as u64))?);
        let pick = cands[rng.gen_range(0..cands.len())].clone();
        let pick = match (&pick, scalar) {
            (PointValue::Scalar(s), true) => {
                let q = match s {
                    Scalar::Exact(q) => q.clone(),
                    Scalar::Float(f) => from_f64(*f)?,
                };
                PointValue::exact(round_down(&q, PERTURB_BITS))
            }
            _ => pick,
        };
        if !system.contains(&pick) {
            return Err(DynError::DomainViolation(format!("perturbed point {pick}")));
        }
        let pick = if system.distance(&fx, &pick)?.lt(&half) { pick } else { fx };
        points.push(pick);
    }
    PseudoOrbit::new(system, delta.clone(), points, Some(x.clone()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Symbolic,
    Interval,
    Search,
    Glued,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub tracer: PointValue,
    /// Upper bound on `d(f^i z, t_i)` over the constrained indices.
    pub max_error: Real,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<u64>,
    pub strategy: Strategy,
}

/// Proof that no point meets every target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InfeasibilityCertificate {
    /// Targets at times `first` and `second` force different symbols at `coordinate`,
    /// each within the agreement radius `radius` required by `epsilon`.
    SymbolConflict {
        first: u64,
        first_target: PointValue,
        second: u64,
        second_target: PointValue,
        coordinate: i64,
        radius: u64,
        #[serde(with = "crate::real::rational_string")]
        epsilon: Rational,
    },
    /// Outward-rounded forward images of the constraint sets are empty at `empty_at`.
    EmptyForwardImage {
        constraints: Vec<Option<IntervalSet>>,
        empty_at: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFailure {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<PointValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_error: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<InfeasibilityCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TraceOutcome {
    Traced(TraceResult),
    Failed(TraceFailure),
}

impl TraceOutcome {
    pub fn traced(&self) -> Option<&TraceResult> {
        match self {
            TraceOutcome::Traced(t) => Some(t),
            TraceOutcome::Failed(_) => None,
        }
    }

    pub fn certificate(&self) -> Option<&InfeasibilityCertificate> {
        match self {
            TraceOutcome::Failed(f) => f.certificate.as_ref(),
            TraceOutcome::Traced(_) => None,
        }
    }
}

/// `eps`-traces a pseudo-orbit: `d(f^i z, x_i) < eps` for every index.
pub fn trace(system: &System, po: &PseudoOrbit, eps: &Rational, seed: u64) -> Result<TraceOutcome> {
    trace_targets(system, &po.targets(), eps, seed)
}

/// Upper bound on `max_i d(f^i z, t_i)`. Squaring orbits are enclosed with outward
/// rounding instead of being squared exactly.
pub fn target_error(system: &System, z: &PointValue, targets: &[(u64, PointValue)]) -> Result<Real> {
    let last = targets.iter().map(|t| t.0).max().unwrap_or(0);
    let by_time: BTreeMap<u64, Vec<&PointValue>> = targets.iter().fold(BTreeMap::new(), |mut m, (t, p)| {
        m.entry(*t).or_insert_with(Vec::new).push(p);
        m
    });
    let mut worst = Real::zero();
    if let (SystemKind::Squaring, PointValue::Scalar(Scalar::Exact(q))) = (system.kind(), z) {
        let pieces = system.pieces()?;
        let mut enc = Interval::point(q.clone());
        for t in 0..=last {
            if t > 0 {
                enc = piecewise::enclose(&pieces, &enc).expect("squaring maps [0,1] into itself");
            }
            for p in by_time.get(&t).into_iter().flatten() {
                let c = match p {
                    PointValue::Scalar(Scalar::Exact(c)) => c.clone(),
                    PointValue::Scalar(Scalar::Float(f)) => from_f64(*f)?,
                    _ => return Err(DynError::MixedSystemPoints),
                };
                let d = (&enc.hi - &c).abs().max((&enc.lo - &c).abs());
                worst = worst.max(Real::Exact(d));
            }
        }
        return Ok(worst);
    }
    let mut cur = z.clone();
    for t in 0..=last {
        if t > 0 {
            cur = system.step(&cur)?;
        }
        for p in by_time.get(&t).into_iter().flatten() {
            worst = worst.max(system.distance(&cur, p)?);
        }
    }
    Ok(worst)
}

fn traced(system: &System, z: PointValue, targets: &[(u64, PointValue)], eps: &Rational, strategy: Strategy) -> Result<Option<TraceResult>> {
    let err = target_error(system, &z, targets)?;
    Ok(err.lt(&Real::Exact(eps.clone())).then_some(TraceResult {
        tracer: z,
        max_error: err,
        period: None,
        strategy,
    }))
}

/// Coordinates pinned by the targets on a shift, or the first conflict.
pub(crate) fn pinned_coordinates(
    targets: &[(u64, PointValue)],
    eps: &Rational,
) -> Result<std::result::Result<BTreeMap<i64, (u8, usize)>, InfeasibilityCertificate>> {
    let mut pinned: BTreeMap<i64, (u8, usize)> = BTreeMap::new();
    let Some(r) = open_agreement_radius(eps) else {
        return Ok(Ok(pinned));
    };
    let r = r as i64;
    for (k, (t, p)) in targets.iter().enumerate() {
        let t = *t as i64;
        let coords: Vec<(i64, u8)> = match p {
            PointValue::BiSeq(s) => (-r..=r).map(|c| (t + c, s.at(c))).collect(),
            PointValue::OneSided(s) => (0..=r).map(|c| (t + c, s.at(c as u64))).collect(),
            _ => return Err(DynError::MixedSystemPoints),
        };
        for (n, sym) in coords {
            match pinned.get(&n) {
                Some(&(s, other)) if s != sym => {
                    return Ok(Err(InfeasibilityCertificate::SymbolConflict {
                        first: targets[other].0,
                        first_target: targets[other].1.clone(),
                        second: t as u64,
                        second_target: p.clone(),
                        coordinate: n,
                        radius: r as u64,
                        epsilon: eps.clone(),
                    }))
                }
                Some(_) => {}
                None => {
                    pinned.insert(n, (sym, k));
                }
            }
        }
    }
    Ok(Ok(pinned))
}

/// The sequence with the pinned symbols and `fill` elsewhere.
pub(crate) fn sequence_from_pins(system: &System, pinned: &BTreeMap<i64, (u8, usize)>, fill: u8) -> PointValue {
    let (lo, hi) = match (pinned.keys().next(), pinned.keys().next_back()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0, 0),
    };
    let word: Vec<u8> = (lo..=hi).map(|n| pinned.get(&n).map_or(fill, |p| p.0)).collect();
    match system.kind() {
        SystemKind::OneSidedShift { .. } => {
            let core: Vec<u8> = (0..=hi.max(0)).map(|n| pinned.get(&n).map_or(fill, |p| p.0)).collect();
            PointValue::OneSided(OneSidedSeq::new(core, vec![fill]).expect("non-empty tail"))
        }
        _ => PointValue::BiSeq(BiSeq::from_window(lo, &word, fill)),
    }
}

/// Solves the targets on a shift exactly, on interval maps by constraint propagation, and
/// elsewhere by search. Failures carry a certificate only when no tracer can exist.
pub fn trace_targets(system: &System, targets: &[(u64, PointValue)], eps: &Rational, seed: u64) -> Result<TraceOutcome> {
    if !eps.is_positive() {
        return Err(DynError::InvalidParameter("epsilon must be positive".into()));
    }
    if targets.is_empty() {
        return Err(DynError::InvalidParameter("nothing to trace".into()));
    }
    for (_, p) in targets {
        system.check_point(p)?;
    }
    if matches!(system.kind(), SystemKind::FullShift { .. } | SystemKind::OneSidedShift { .. }) {
        return Ok(match pinned_coordinates(targets, eps)? {
            Err(cert) => TraceOutcome::Failed(TraceFailure {
                best: None,
                best_error: None,
                certificate: Some(cert),
            }),
            Ok(pins) => {
                let z = sequence_from_pins(system, &pins, 0);
                match traced(system, z.clone(), targets, eps, Strategy::Symbolic)? {
                    Some(t) => TraceOutcome::Traced(t),
                    None => TraceOutcome::Failed(TraceFailure {
                        best_error: Some(target_error(system, &z, targets)?),
                        best: Some(z),
                        certificate: None,
                    }),
                }
            }
        });
    }
    let start = targets.iter().find(|t| t.0 == 0).map(|t| t.1.clone());
    if let Some(z) = &start {
        if let Some(t) = traced(system, z.clone(), targets, eps, Strategy::Search)? {
            return Ok(TraceOutcome::Traced(t));
        }
    }
    if let Ok(pieces) = system.pieces() {
        let last = targets.iter().map(|t| t.0).max().unwrap() as usize;
        let mut constraints: Vec<Option<IntervalSet>> = vec![None; last + 1];
        for (t, p) in targets {
            let ball = system.region_to_intervals(&Region::ball(p.clone(), eps.clone()))?;
            let slot = &mut constraints[*t as usize];
            *slot = Some(match slot.take() {
                Some(c) => c.intersect(&ball),
                None => ball,
            });
        }
        if let Some(inner) = piecewise::feasible_set(&pieces, &constraints, Approx::Inner) {
            for part in inner.parts() {
                if let Some(t) = traced(system, PointValue::exact(part.midpoint()), targets, eps, Strategy::Interval)? {
                    return Ok(TraceOutcome::Traced(t));
                }
            }
        }
        let dom = IntervalSet::single(system.domain_interval().expect("interval maps have domains"));
        if let Err(empty_at) = forward_outer(&pieces, &dom, &constraints) {
            return Ok(TraceOutcome::Failed(TraceFailure {
                best: None,
                best_error: None,
                certificate: Some(InfeasibilityCertificate::EmptyForwardImage { constraints, empty_at }),
            }));
        }
    }
    // Seeded search around the time-zero target, or the earliest one pulled back when possible.
    let anchor = match start {
        Some(z) => z,
        None => {
            let (t, p) = targets.iter().min_by_key(|t| t.0).unwrap();
            if system.capabilities().invertible {
                system.iterate(p, -(*t as i64))?
            } else {
                p.clone()
            }
        }
    };
    let mut best: Option<(PointValue, Real)> = None;
    let mut cands = vec![anchor.clone()];
    cands.extend(neighbours(system, &anchor, eps, SEARCH_BUDGET, seed)?);
    for z in cands {
        let err = target_error(system, &z, targets)?;
        if err.lt(&Real::Exact(eps.clone())) {
            return Ok(TraceOutcome::Traced(TraceResult {
                tracer: z,
                max_error: err,
                period: None,
                strategy: Strategy::Search,
            }));
        }
        if best.as_ref().map_or(true, |b| err.lt(&b.1)) {
            best = Some((z, err));
        }
    }
    let (best, best_error) = best.map(|(z, e)| (Some(z), Some(e))).unwrap_or((None, None));
    Ok(TraceOutcome::Failed(TraceFailure {
        best,
        best_error,
        certificate: None,
    }))
}

/// Independent re-check of an infeasibility certificate.
pub fn check_infeasibility(system: &System, cert: &InfeasibilityCertificate) -> Result<bool> {
    match cert {
        InfeasibilityCertificate::SymbolConflict {
            first,
            first_target,
            second,
            second_target,
            coordinate,
            radius,
            epsilon,
        } => {
            if open_agreement_radius(epsilon) != Some(*radius) {
                return Ok(false);
            }
            let r = *radius as i64;
            let sym = |t: u64, p: &PointValue| -> Option<u8> {
                let c = coordinate - t as i64;
                match p {
                    PointValue::BiSeq(s) if c.abs() <= r => Some(s.at(c)),
                    PointValue::OneSided(s) if (0..=r).contains(&c) => Some(s.at(c as u64)),
                    _ => None,
                }
            };
            system.check_point(first_target)?;
            system.check_point(second_target)?;
            Ok(matches!((sym(*first, first_target), sym(*second, second_target)), (Some(a), Some(b)) if a != b))
        }
        InfeasibilityCertificate::EmptyForwardImage { constraints, empty_at } => {
            let pieces = system.pieces()?;
            let dom = IntervalSet::single(system.domain_interval().expect("interval maps have domains"));
            Ok(forward_outer(&pieces, &dom, constraints) == Err(*empty_at))
        }
    }
}

/// Holds at `eps` when some grid `delta` lets every seeded `delta`-pseudo-orbit through `x`
/// be `eps`-traced. Fails only when every grid value produced a certified untraceable orbit.
pub fn shadowable_point_verdict(
    system: &System,
    x: &PointValue,
    eps: &Rational,
    delta_grid: &[Rational],
    trials: usize,
    length: usize,
    seed: u64,
) -> Result<Verdict> {
    if delta_grid.is_empty() || trials == 0 {
        return Err(DynError::InvalidParameter("need a non-empty grid and trials".into()));
    }
    let op = "shadowable_point";
    let mut certified: Vec<(Rational, PseudoOrbit, InfeasibilityCertificate)> = Vec::new();
    let mut parts = Vec::new();
    for (g, delta) in delta_grid.iter().enumerate() {
        let mut all = true;
        let mut cert_here = None;
        let mut worst = Real::zero();
        for trial in 0..trials {
            let s = shard_seed(seed, (g * trials + trial) as u64);
            let po = perturbed_orbit(system, x, delta, length, s)?;
            match trace(system, &po, eps, s)? {
                TraceOutcome::Traced(t) => worst = worst.max(t.max_error),
                TraceOutcome::Failed(f) => {
                    all = false;
                    if let Some(c) = f.certificate {
                        cert_here.get_or_insert((delta.clone(), po, c));
                    }
                }
            }
        }
        if all {
            return Ok(Verdict::holds(op, length as u64, seed)
                .param("x", x)
                .param_q("epsilon", eps)
                .param_q("delta", delta)
                .param("trials", trials)
                .param("max_error", worst)
                .with_parts(parts));
        }
        parts.push(Verdict::inconclusive(op, length as u64, seed).param_q("delta", delta));
        if let Some(c) = cert_here {
            certified.push(c);
        }
    }
    let v = if certified.len() == delta_grid.len() {
        let (delta, po, cert) = certified.pop().unwrap();
        Verdict::fails(op, Witness::Infeasible(cert), length as u64, seed)
            .param_q("delta", &delta)
            .param("pseudo_orbit", po)
    } else {
        Verdict::inconclusive(op, length as u64, seed)
    };
    Ok(v.param("x", x).param_q("epsilon", eps).param("trials", trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::{int, pow2};

    #[test]
    fn true_orbits_are_pseudo_orbits() {
        let sq = System::squaring();
        let x = PointValue::exact(rat(9, 10));
        let orbit = sq.orbit(&x, 4).unwrap();
        let po = PseudoOrbit::new(&sq, pow2(-40), orbit, Some(x.clone())).unwrap();
        match trace(&sq, &po, &pow2(-30), 0).unwrap() {
            TraceOutcome::Traced(t) => assert_eq!(t.tracer, x),
            other => panic!("{other:?}"),
        }
        let bad = vec![x.clone(), PointValue::exact(rat(1, 2))];
        assert!(matches!(
            PseudoOrbit::new(&sq, rat(1, 10), bad, None),
            Err(DynError::InvalidPseudoOrbit { index: 0 })
        ));
    }

    #[test]
    fn shift_perturbations_stay_away_from_the_origin() {
        let shift = System::full_shift(2);
        let x: PointValue = "(01)(01)@0".parse().unwrap();
        let po = perturbed_orbit(&shift, &x, &rat(1, 4), 10, 3).unwrap();
        for w in po.points.windows(2) {
            let fx = shift.step(&w[0]).unwrap();
            let d = fx.as_biseq().unwrap().first_disagreement(w[1].as_biseq().unwrap());
            assert!(d.map_or(true, |k| k >= 2));
        }
        match trace(&shift, &po, &rat(1, 2), 0).unwrap() {
            TraceOutcome::Traced(t) => assert!(t.max_error.lt(&Real::Exact(rat(1, 2)))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn squaring_perturbations_are_small() {
        let sq = System::squaring();
        let x = PointValue::exact(rat(9, 10));
        let po = perturbed_orbit(&sq, &x, &rat(1, 100), 5, 1).unwrap();
        for w in po.points.windows(2) {
            let d = sq.distance(&sq.step(&w[0]).unwrap(), &w[1]).unwrap();
            assert!(d.lt(&Real::Exact(rat(1, 200))));
        }
    }

    #[test]
    fn squaring_traces_near_one() {
        let sq = System::squaring();
        let one = PointValue::exact(int(1));
        for seed in 0..4 {
            let po = perturbed_orbit(&sq, &one, &rat(1, 50), 24, seed).unwrap();
            let out = trace(&sq, &po, &rat(1, 10), seed).unwrap();
            assert!(out.traced().is_some(), "seed {seed}: {out:?}");
        }
    }

    #[test]
    fn conflicting_targets_are_certified() {
        let shift = System::full_shift(2);
        let zero: PointValue = "(0)(0)@0".parse().unwrap();
        let one: PointValue = "(1)(1)@0".parse().unwrap();
        let out = trace_targets(&shift, &[(0, zero), (1, one)], &rat(1, 4), 0).unwrap();
        let cert = out.certificate().expect("certificate");
        assert!(check_infeasibility(&shift, cert).unwrap());
        let sq = System::squaring();
        let targets = vec![
            (0, PointValue::exact(int(1))),
            (3, PointValue::exact(int(0))),
        ];
        let out = trace_targets(&sq, &targets, &rat(1, 10), 0).unwrap();
        let cert = out.certificate().expect("certificate");
        assert!(matches!(cert, InfeasibilityCertificate::EmptyForwardImage { empty_at: 3, .. }));
        assert!(check_infeasibility(&sq, cert).unwrap());
    }

    #[test]
    fn circle_tracer_from_constraints() {
        let circle = System::doubling_circle();
        let x = PointValue::exact(rat(1, 5));
        let po = perturbed_orbit(&circle, &x, &pow2(-8), 12, 2).unwrap();
        let out = trace(&circle, &po, &pow2(-4), 0).unwrap();
        assert!(out.traced().is_some(), "{out:?}");
    }

    #[test]
    fn shadowable_points() {
        let shift = System::full_shift(2);
        let x: PointValue = "(0)1(1)@0".parse().unwrap();
        let v = shadowable_point_verdict(&shift, &x, &rat(1, 2), &[rat(1, 4)], 6, 12, 9).unwrap();
        assert!(v.outcome.holds());
        let line = System::doubling_line();
        let v = shadowable_point_verdict(&line, &PointValue::exact(int(0)), &rat(1, 10), &[rat(1, 20), rat(1, 40)], 4, 10, 1).unwrap();
        assert!(v.outcome.holds(), "{v:?}");
    }
}
