//! Chaos at a point: sensitivity, periodic points in deleted balls, Devaney chaos.

pub mod entropy;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{DynError, Result};
use crate::expansivity::measure::cover_constraints;
use crate::interval::IntervalSet;
use crate::point::PointValue;
use crate::real::{from_f64, pow2, rat, Rational, Real};
use crate::sampling::{neighbours, shard_seed};
use crate::shadowing::{specification_trace_symbolic, transitive_point_verdict, Segment, SpecSegments};
use crate::symbolic::{open_agreement_radius, BiSeq, OneSidedSeq};
use crate::systems::piecewise::feasible_set;
use crate::systems::{Approx, Region, System, SystemKind};
use crate::verdict::{weakest, Outcome, Verdict, Witness};

pub use entropy::{
    entropy_certificate_from_spec_points, entropy_estimate, separated_set, verify_entropy_certificate, Compact,
    EntropyCertificate, EntropyEstimate, Maximality, SeparatedSet,
};

/// Largest `delta_x` tried is `1/2`; smaller ones go down to `2^-SENSITIVITY_LEVELS`.
const SENSITIVITY_LEVELS: i64 = 16;
/// Halvings of the search radius when a periodic point must also lie in `N`.
const RADIUS_HALVINGS: usize = 32;

fn real_rational(r: &Real) -> Result<Rational> {
    match r {
        Real::Exact(q) => Ok(q.clone()),
        Real::Approx(f) => from_f64(*f),
    }
}

/// Least `n <= bound` with `f^n(p) = p`.
pub fn prime_period(system: &System, p: &PointValue, bound: u64) -> Result<Option<u64>> {
    let mut cur = p.clone();
    for n in 1..=bound {
        cur = system.step(&cur)?;
        if cur == *p {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

fn is_shift(system: &System) -> bool {
    matches!(system.kind(), SystemKind::FullShift { .. } | SystemKind::OneSidedShift { .. })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityWitness {
    #[serde(with = "crate::real::rational_string")]
    pub radius: Rational,
    pub point: PointValue,
    pub index: u64,
    pub distance: Real,
}

/// Looks for `delta_x` and, for every radius, a `y` in the ball with `d(f^n x, f^n y) > delta_x`
/// for some `1 <= n <= horizon`. `delta_x` is the largest power of two below every found
/// separation, and must be at least the largest radius so that it does not shrink with the ball.
pub fn sensitivity_witness(
    system: &System,
    x: &PointValue,
    radii: &[Rational],
    horizon: u64,
    budget: usize,
    seed: u64,
) -> Result<Verdict> {
    if radii.is_empty() || radii.iter().any(|r| !r.is_positive()) {
        return Err(DynError::InvalidParameter("need positive radii".into()));
    }
    system.check_point(x)?;
    let op = "sensitivity";
    let x_orbit = system.orbit(x, horizon as usize)?;
    let mut best: Vec<(Rational, PointValue, u64, Real)> = Vec::new();
    for (k, r) in radii.iter().enumerate() {
        let half = r * rat(1, 2);
        let mut found: Option<(PointValue, u64, Real)> = None;
        for y in neighbours(system, x, &half, budget, shard_seed(seed, k as u64))? {
            let mut cur = y.clone();
            for n in 1..=horizon {
                cur = system.step(&cur)?;
                let d = system.distance(&x_orbit[n as usize], &cur)?;
                if found.as_ref().map_or(true, |f| f.2.lt(&d)) {
                    found = Some((y.clone(), n, d));
                }
            }
        }
        match found {
            Some((y, n, d)) if !d.is_zero() => best.push((r.clone(), y, n, d)),
            _ => return Ok(Verdict::inconclusive(op, horizon, seed).param("x", x).param_q("radius", r)),
        }
    }
    let floor = best.iter().map(|b| b.3.clone()).reduce(Real::min).unwrap();
    let r_max = radii.iter().max().unwrap();
    let delta_x = (1..=SENSITIVITY_LEVELS).map(|k| pow2(-k)).find(|d| Real::Exact(d.clone()).lt(&floor));
    match delta_x {
        Some(d) if d >= *r_max => {
            let witnesses: Vec<SensitivityWitness> = best
                .into_iter()
                .map(|(radius, point, index, distance)| SensitivityWitness {
                    radius,
                    point,
                    index,
                    distance,
                })
                .collect();
            Ok(Verdict::holds(op, horizon, seed)
                .param("x", x)
                .param_q("delta_x", &d)
                .param("witnesses", witnesses))
        }
        _ => Ok(Verdict::inconclusive(op, horizon, seed)
            .param("x", x)
            .param("smallest_separation", floor)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicWitness {
    pub point: PointValue,
    pub period: u64,
    pub distance: Real,
    /// The orbit segment forced far from the orbit of a periodic `x`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far_point: Option<PointValue>,
}

/// A periodic point `p != x` with `d(p, x) < radius`. Shifts build it with a periodic
/// specification tracer for the segments `x` at time 0 and a second point at time `M`; when
/// `x` is itself periodic the second point is chosen far from the orbit of `x`, so the tracer
/// cannot be `x`. Other systems search the enumerated periodic points up to `period_bound`.
pub fn periodic_in_deleted_ball(system: &System, x: &PointValue, radius: &Rational, period_bound: u32) -> Result<Option<PeriodicWitness>> {
    if !radius.is_positive() {
        return Err(DynError::InvalidParameter("radius must be positive".into()));
    }
    system.check_point(x)?;
    let r_real = Real::Exact(radius.clone());
    if is_shift(system) {
        let (own_period, constant) = match x {
            PointValue::BiSeq(s) => (s.period(), s.period() == Some(1)),
            PointValue::OneSided(s) => (s.period().filter(|_| s.core().is_empty()), s.period() == Some(1) && s.core().is_empty()),
            _ => return Err(DynError::MixedSystemPoints),
        };
        let own_period = match own_period {
            Some(p) if system.iterate(x, p as i64)? == *x => Some(p),
            _ => None,
        };
        let one_sided = matches!(x, PointValue::OneSided(_));
        let (eps, x2) = match own_period {
            None => (radius.clone(), x.clone()),
            Some(p) => {
                let r = open_agreement_radius(radius).unwrap_or(0).max(p as u64);
                let eps = radius.clone().min(pow2(-(r as i64)));
                let s0 = symbol_at(x, 0);
                let c = if constant { (s0 + 1) % system.alphabet().unwrap_or(2) } else { 0 };
                let far = if one_sided {
                    PointValue::OneSided(OneSidedSeq::periodic(&[c]))
                } else {
                    PointValue::BiSeq(BiSeq::constant(c))
                };
                (eps, far)
            }
        };
        let r = open_agreement_radius(&eps).map_or(0, |r| r as u64);
        let m = if one_sided { r + 1 } else { 2 * r + 1 };
        let spec = SpecSegments {
            segments: vec![Segment { a: 0, b: 0, x: x.clone() }, Segment { a: m, b: m, x: x2.clone() }],
            gap: m,
            epsilon: eps,
        };
        let t = specification_trace_symbolic(system, &spec, true)?;
        let z = t.tracer;
        let d = system.distance(&z, x)?;
        if z == *x || !d.lt(&r_real) {
            return Ok(None);
        }
        let period = prime_period(system, &z, 2 * m)?.ok_or(DynError::NotPeriodic)?;
        return Ok(Some(PeriodicWitness {
            point: z,
            period,
            distance: d,
            far_point: own_period.map(|_| x2),
        }));
    }
    for n in 1..=period_bound {
        let pts = match system.periodic_points(n) {
            Ok(p) => p,
            Err(DynError::BudgetExceeded(_)) => break,
            Err(e) => return Err(e),
        };
        for p in pts.points {
            if p == *x {
                continue;
            }
            let d = system.distance(&p, x)?;
            if d.lt(&r_real) {
                let period = prime_period(system, &p, n as u64)?.unwrap_or(n as u64);
                return Ok(Some(PeriodicWitness {
                    point: p,
                    period,
                    distance: d,
                    far_point: None,
                }));
            }
        }
    }
    Ok(None)
}

fn symbol_at(p: &PointValue, n: i64) -> u8 {
    match p {
        PointValue::BiSeq(s) => s.at(n),
        PointValue::OneSided(s) => s.at(n.max(0) as u64),
        _ => 0,
    }
}

/// Every tested deleted ball around `x` contains a periodic point.
pub fn dense_periodic_at_point(system: &System, x: &PointValue, radii: &[Rational], period_bound: u32) -> Result<Verdict> {
    if radii.is_empty() {
        return Err(DynError::InvalidParameter("need radii".into()));
    }
    let op = "dense_periodic";
    let mut found = Vec::new();
    for r in radii {
        match periodic_in_deleted_ball(system, x, r, period_bound)? {
            Some(w) => found.push(w),
            None => {
                return Ok(Verdict::inconclusive(op, period_bound as u64, 0)
                    .param("x", x)
                    .param_q("radius", r)
                    .param("period_bound", period_bound))
            }
        }
    }
    Ok(Verdict::holds(op, period_bound as u64, 0).param("x", x).param("periodic_points", found))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disjunct {
    /// `d(f^{nj} p, f^{nj} x) > eta`.
    Periodic,
    /// `d(f^{nj} x, f^{nj} y) > eta`.
    Neighbour,
}

/// Every quantity of the sensitivity construction from a periodic orbit far from `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityConstruction {
    pub x: PointValue,
    pub q: PointValue,
    pub q_period: u64,
    /// Twice the distance from `x` to the orbit of `q`.
    #[serde(with = "crate::real::rational_string")]
    pub delta: Rational,
    #[serde(with = "crate::real::rational_string")]
    pub eta: Rational,
    pub p: PointValue,
    pub p_period: u64,
    pub y: PointValue,
    pub k: u64,
    pub j: u64,
    pub side: Disjunct,
    pub distance: Real,
}

/// Builds the sensitivity witness from a periodic point `q`: `eta = delta / 8` with
/// `delta = 2 d(x, O(q))`, a periodic `p` in `N ∩ B_eta(x)` other than `x`, a `y` there whose
/// orbit enters `W = {w : d(f^i w, f^i q) < eta, 0 <= i <= n}` at time `k`, and `j = k / n + 1`.
pub fn sensitivity_constant_from_periodic(
    system: &System,
    x: &PointValue,
    q: &PointValue,
    neighbourhood: &Region,
    horizon: u64,
) -> Result<SensitivityConstruction> {
    system.check_point(x)?;
    let q_period = prime_period(system, q, horizon)?.ok_or(DynError::NotPeriodic)?;
    let orbit_q = system.orbit(q, q_period as usize - 1)?;
    let mut dist: Option<Real> = None;
    for p in &orbit_q {
        let d = system.distance(x, p)?;
        dist = Some(match dist {
            Some(m) => m.min(d),
            None => d,
        });
    }
    let dist = real_rational(&dist.unwrap())?;
    if !dist.is_positive() {
        return Err(DynError::InvalidParameter("x lies on the orbit of q".into()));
    }
    if !system.region_contains(neighbourhood, x)? {
        return Err(DynError::InvalidParameter("the neighbourhood must contain x".into()));
    }
    let delta = &dist * rat(2, 1);
    let eta = &delta * rat(1, 8);
    let eta_real = Real::Exact(eta.clone());

    let mut radius = eta.clone();
    let mut periodic = None;
    for _ in 0..RADIUS_HALVINGS {
        if let Some(w) = periodic_in_deleted_ball(system, x, &radius, 16)? {
            if system.region_contains(neighbourhood, &w.point)? {
                periodic = Some(w);
                break;
            }
        }
        radius *= rat(1, 2);
    }
    let p = periodic.ok_or(DynError::NoPeriodicInNeighborhood)?;
    let n = p.period;

    let (y, k) = transitive_visit(system, x, q, n, &eta, neighbourhood, horizon)?.ok_or(DynError::NoTransitiveVisit)?;
    let j = k / n + 1;
    let t = (n * j) as i64;
    let fp = system.iterate(&p.point, t)?;
    let fx = system.iterate(x, t)?;
    let fy = system.iterate(&y, t)?;
    let d1 = system.distance(&fp, &fx)?;
    let d2 = system.distance(&fx, &fy)?;
    let (side, distance) = if eta_real.lt(&d1) {
        (Disjunct::Periodic, d1)
    } else if eta_real.lt(&d2) {
        (Disjunct::Neighbour, d2)
    } else {
        return Err(DynError::InvalidParameter("neither disjunct exceeds eta".into()));
    };
    Ok(SensitivityConstruction {
        x: x.clone(),
        q: q.clone(),
        q_period,
        delta,
        eta,
        p: p.point,
        p_period: n,
        y,
        k,
        j,
        side,
        distance,
    })
}

/// `y ∈ N ∩ B_eta(x)` and `k >= 1` with `f^{k+i}(y)` within `eta` of `f^i(q)` for `0 <= i <= n`.
fn transitive_visit(
    system: &System,
    x: &PointValue,
    q: &PointValue,
    n: u64,
    eta: &Rational,
    neighbourhood: &Region,
    horizon: u64,
) -> Result<Option<(PointValue, u64)>> {
    let check = |y: &PointValue, k: u64| -> Result<bool> {
        let e = Real::Exact(eta.clone());
        if !system.distance(x, y)?.lt(&e) || !system.region_contains(neighbourhood, y)? {
            return Ok(false);
        }
        let mut a = system.iterate(y, k as i64)?;
        let mut b = q.clone();
        for i in 0..=n {
            if i > 0 {
                a = system.step(&a)?;
                b = system.step(&b)?;
            }
            if !system.distance(&a, &b)?.lt(&e) {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if is_shift(system) {
        let r = open_agreement_radius(eta).map_or(0, |r| r as i64);
        let extent = match cover_constraints(system, neighbourhood) {
            Ok(c) => c.keys().map(|k| k.abs()).max().unwrap_or(0),
            Err(_) => 0,
        };
        let a = r.max(extent);
        let one_sided = matches!(x, PointValue::OneSided(_));
        let k = if one_sided { a + 1 } else { a + r + 1 };
        let lo_q = if one_sided { 0 } else { -r };
        let mut word: Vec<u8> = (if one_sided { 0 } else { -a }..=a).map(|c| symbol_at(x, c)).collect();
        let start = if one_sided { 0 } else { -a };
        // Coordinates between the two windows are filled with zeros.
        word.extend(std::iter::repeat(0).take((k + lo_q - a - 1).max(0) as usize));
        word.extend((lo_q..=n as i64 + r).map(|c| symbol_at(q, c)));
        let y = if one_sided {
            PointValue::OneSided(OneSidedSeq::new(word, vec![0]).expect("non-empty tail"))
        } else {
            PointValue::BiSeq(BiSeq::from_window(start, &word, 0))
        };
        return Ok(check(&y, k as u64)?.then_some((y, k as u64)));
    }
    let Ok(pieces) = system.pieces() else {
        return Ok(None);
    };
    let start = system
        .region_to_intervals(neighbourhood)?
        .intersect(&system.region_to_intervals(&Region::ball(x.clone(), eta.clone()))?);
    let balls: Vec<IntervalSet> = system
        .orbit(q, n as usize)?
        .into_iter()
        .map(|p| system.region_to_intervals(&Region::ball(p, eta.clone())))
        .collect::<Result<_>>()?;
    for k in 1..=horizon {
        let mut constraints: Vec<Option<IntervalSet>> = vec![None; (k + n) as usize + 1];
        constraints[0] = Some(start.clone());
        for (i, b) in balls.iter().enumerate() {
            let slot = &mut constraints[k as usize + i];
            *slot = Some(match slot.take() {
                Some(c) => c.intersect(b),
                None => b.clone(),
            });
        }
        if let Some(set) = feasible_set(&pieces, &constraints, Approx::Inner) {
            for part in set.parts() {
                let y = PointValue::exact(part.midpoint());
                if check(&y, k)? {
                    return Ok(Some((y, k)));
                }
            }
        }
    }
    Ok(None)
}

/// Re-evaluates a sensitivity construction from its stored points.
pub fn check_sensitivity_construction(system: &System, c: &SensitivityConstruction) -> Result<bool> {
    let e = Real::Exact(c.eta.clone());
    if c.eta != &c.delta * rat(1, 8) || c.p == c.x || c.j != c.k / c.p_period + 1 {
        return Ok(false);
    }
    if prime_period(system, &c.q, c.q_period)? != Some(c.q_period) || prime_period(system, &c.p, c.p_period)? != Some(c.p_period) {
        return Ok(false);
    }
    let mut dist: Option<Real> = None;
    for p in system.orbit(&c.q, c.q_period as usize - 1)? {
        let d = system.distance(&c.x, &p)?;
        dist = Some(dist.map_or(d.clone(), |m| m.min(d)));
    }
    if real_rational(&dist.unwrap())? * rat(2, 1) != c.delta {
        return Ok(false);
    }
    if !system.distance(&c.x, &c.p)?.lt(&e) || !system.distance(&c.x, &c.y)?.lt(&e) {
        return Ok(false);
    }
    let t = (c.p_period * c.j) as i64;
    let fx = system.iterate(&c.x, t)?;
    let d = match c.side {
        Disjunct::Periodic => system.distance(&system.iterate(&c.p, t)?, &fx)?,
        Disjunct::Neighbour => system.distance(&fx, &system.iterate(&c.y, t)?)?,
    };
    Ok(e.lt(&d) && d == c.distance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DevaneyParams {
    #[serde(with = "crate::real::rational_vec")]
    pub radii: Vec<Rational>,
    pub probes: Vec<Region>,
    pub n_max: u64,
    pub period_bound: u32,
    pub horizon: u64,
    pub budget: usize,
    pub seed: u64,
}

/// Transitivity, dense periodic points and sensitivity at `x`; the outcome is the weakest part.
pub fn devaney_point_verdict(system: &System, x: &PointValue, params: &DevaneyParams) -> Result<Verdict> {
    let parts = vec![
        transitive_point_verdict(system, x, &params.radii, &params.probes, params.n_max, params.seed)?,
        dense_periodic_at_point(system, x, &params.radii, params.period_bound)?,
        sensitivity_witness(system, x, &params.radii, params.horizon, params.budget, params.seed)?,
    ];
    let outcome = weakest(parts.iter().map(|p| p.outcome));
    let witness: Option<Witness> = parts.iter().find(|p| p.outcome == Outcome::FailsWithWitness).and_then(|p| p.witness.clone());
    let mut v = Verdict::new("devaney_point", outcome, params.horizon, params.seed).param("x", x);
    v.witness = witness;
    Ok(v.with_parts(parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::int;

    #[test]
    fn shift_sensitivity_flips_a_far_coordinate() {
        let shift = System::full_shift(2);
        let x: PointValue = "(0)1(0)@0".parse().unwrap();
        let radii: Vec<Rational> = (1..=6).map(|k| pow2(-k)).collect();
        let v = sensitivity_witness(&shift, &x, &radii, 12, 8, 0).unwrap();
        assert!(v.outcome.holds(), "{v:?}");
        assert_eq!(v.params["delta_x"], "1/2");
    }

    #[test]
    fn identity_is_never_sensitive() {
        let id = System::identity();
        for budget in [4, 16, 64] {
            let v = sensitivity_witness(&id, &PointValue::exact(rat(1, 3)), &[rat(1, 10), rat(1, 100)], 8, budget, 0).unwrap();
            assert_eq!(v.outcome, Outcome::Inconclusive);
        }
    }

    #[test]
    fn circle_sensitivity() {
        let c = System::doubling_circle();
        let v = sensitivity_witness(&c, &PointValue::exact(rat(3, 10)), &[rat(1, 1000)], 16, 8, 0).unwrap();
        assert!(v.outcome.holds(), "{v:?}");
    }

    #[test]
    fn periodic_points_in_deleted_balls() {
        let shift = System::full_shift(2);
        for s in ["(0)1(0)@0", "(01)(01)@0", "(0)(0)@0", "(1)(1)@0", "(110)(110)@0"] {
            let x: PointValue = s.parse().unwrap();
            for k in 1..=6 {
                let r = pow2(-k);
                let w = periodic_in_deleted_ball(&shift, &x, &r, 8).unwrap().expect("periodic point");
                assert_ne!(w.point, x);
                assert!(w.distance.lt(&Real::Exact(r)));
                assert_eq!(shift.iterate(&w.point, w.period as i64).unwrap(), w.point);
            }
        }
        let sq = System::squaring();
        let v = dense_periodic_at_point(&sq, &PointValue::exact(rat(1, 2)), &[rat(1, 4)], 8).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
        let v = dense_periodic_at_point(&sq, &PointValue::exact(rat(1, 2)), &[int(2)], 8).unwrap();
        assert!(v.outcome.holds());
    }

    #[test]
    fn sensitivity_from_a_fixed_point() {
        let shift = System::full_shift(2);
        let x: PointValue = "(011)(011)@0".parse().unwrap();
        let q: PointValue = "(1)(1)@0".parse().unwrap();
        let n = Region::ball(x.clone(), rat(1, 2));
        let c = sensitivity_constant_from_periodic(&shift, &x, &q, &n, 64).unwrap();
        assert_eq!(c.eta, &c.delta * rat(1, 8));
        assert!(check_sensitivity_construction(&shift, &c).unwrap());

        let circle = System::doubling_circle();
        let x = PointValue::exact(rat(2, 7));
        let q = PointValue::exact(int(0));
        let n = Region::ball(x.clone(), rat(1, 10));
        let c = sensitivity_constant_from_periodic(&circle, &x, &q, &n, 64).unwrap();
        assert_eq!(c.delta, rat(4, 7));
        assert!(check_sensitivity_construction(&circle, &c).unwrap());
        assert!(matches!(
            sensitivity_constant_from_periodic(&circle, &q, &q, &n, 64),
            Err(DynError::InvalidParameter(_))
        ));
    }

    #[test]
    fn devaney_points() {
        let shift = System::full_shift(2);
        let params = DevaneyParams {
            radii: vec![rat(1, 2), rat(1, 8)],
            probes: vec![Region::cylinder(0, vec![1, 1]), Region::cylinder(-2, vec![0, 1, 0])],
            n_max: 12,
            period_bound: 8,
            horizon: 12,
            budget: 8,
            seed: 0,
        };
        let x: PointValue = "(0)1(0)@0".parse().unwrap();
        let v = devaney_point_verdict(&shift, &x, &params).unwrap();
        assert!(v.outcome.holds(), "{v:?}");
        let line = System::doubling_line();
        let params = DevaneyParams {
            radii: vec![rat(1, 4)],
            probes: vec![Region::ball(PointValue::exact(int(0)), rat(1, 8))],
            ..params
        };
        let v = devaney_point_verdict(&line, &PointValue::exact(int(1)), &params).unwrap();
        assert!(v.outcome.fails());
        assert!(matches!(v.witness, Some(Witness::Escape(_))));
    }
}
