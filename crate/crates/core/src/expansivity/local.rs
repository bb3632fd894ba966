//! Local stable and unstable sets, converging semiorbits, sinks, canonical coordinates
//! and the periodic restriction.

use num_traits::Signed;

use crate::error::{DynError, Result};
use crate::point::PointValue;
use crate::real::{rat, Rational, Real};
use crate::sampling::{neighbours, shard_seed};
use crate::symbolic::BiSeq;
use crate::systems::{Region, System, SystemKind};
use crate::verdict::{Verdict, Witness};

use super::{default_window, horizon_violation, orbit_at};

fn require_invertible(system: &System) -> Result<()> {
    if system.capabilities().invertible {
        Ok(())
    } else {
        Err(DynError::NonInvertible)
    }
}

fn membership(op: &str, system: &System, y: &PointValue, x: &PointValue, delta: &Rational, times: &[i64]) -> Result<Verdict> {
    system.check_point(x)?;
    system.check_point(y)?;
    let horizon = times.iter().map(|t| t.unsigned_abs()).max().unwrap_or(0);
    let v = match horizon_violation(system, x, y, &Real::Exact(delta.clone()), times)? {
        None => Verdict::holds(op, horizon, 0),
        Some((index, distance)) => Verdict::fails(op, Witness::Index { index, distance }, horizon, 0),
    };
    Ok(v.param("y", y).param("x", x).param_q("delta", delta))
}

/// `d(f^i x, f^i y) <= delta` for `0 <= i <= T`.
pub fn local_stable_membership(system: &System, y: &PointValue, x: &PointValue, delta: &Rational, horizon: u64) -> Result<Verdict> {
    let times: Vec<i64> = (0..=horizon as i64).collect();
    membership("local_stable_membership", system, y, x, delta, &times)
}

/// `d(f^-i x, f^-i y) <= delta` for `0 <= i <= T`.
pub fn local_unstable_membership(system: &System, y: &PointValue, x: &PointValue, delta: &Rational, horizon: u64) -> Result<Verdict> {
    require_invertible(system)?;
    let times: Vec<i64> = (0..=horizon as i64).map(|i| -i).collect();
    membership("local_unstable_membership", system, y, x, delta, &times)
}

/// Smallest `m <= T/2` whose tail `orbit[m..]` has diameter `<= tol`, or the widest pair of
/// the shortest tail.
fn settling_tail(system: &System, orbit: &[PointValue], tol: &Real) -> Result<std::result::Result<usize, (usize, usize, Real)>> {
    let t = orbit.len() - 1;
    let mut diam_from = vec![(Real::zero(), 0usize, 0usize); t + 1];
    // diam_from[m] is the diameter of orbit[m..], built from the end.
    for m in (0..t).rev() {
        let mut best = diam_from[m + 1].clone();
        for j in m + 1..=t {
            let d = system.distance(&orbit[m], &orbit[j])?;
            if d.cmp_real(&best.0).is_gt() {
                best = (d, m, j);
            }
        }
        diam_from[m] = best;
    }
    for (m, entry) in diam_from.iter().enumerate().take(t / 2 + 1) {
        if entry.0.le(tol) {
            return Ok(Ok(m));
        }
    }
    let (d, i, j) = diam_from[t / 2].clone();
    Ok(Err((i, j, d)))
}

/// Whether the forward and backward orbit tails of `x` each settle within `tol` by `T/2`.
///
/// On a non-invertible system only the forward tail can be checked: a forward failure
/// is reported, a forward pass is `NonInvertible`.
pub fn converging_semiorbit_check(system: &System, x: &PointValue, horizon: u64, tol: &Rational) -> Result<Verdict> {
    system.check_point(x)?;
    let tol_r = Real::Exact(tol.clone());
    let op = "converging_semiorbit";
    let fwd_times: Vec<i64> = (0..=horizon as i64).collect();
    let fwd = orbit_at(system, x, &fwd_times)?;
    let fwd_tail = settling_tail(system, &fwd, &tol_r)?;
    if let Err((i, j, d)) = &fwd_tail {
        return Ok(Verdict::fails(
            op,
            Witness::Pair {
                first: fwd[*i].clone(),
                second: fwd[*j].clone(),
                index: *j as i64,
                distance: d.clone(),
            },
            horizon,
            0,
        )
        .param("x", x)
        .param("tail", "forward")
        .param_q("tol", tol));
    }
    require_invertible(system)?;
    let bwd_times: Vec<i64> = (0..=horizon as i64).map(|i| -i).collect();
    let bwd = orbit_at(system, x, &bwd_times)?;
    let m_fwd = fwd_tail.unwrap();
    match settling_tail(system, &bwd, &tol_r)? {
        Err((i, j, d)) => Ok(Verdict::fails(
            op,
            Witness::Pair {
                first: bwd[i].clone(),
                second: bwd[j].clone(),
                index: -(j as i64),
                distance: d,
            },
            horizon,
            0,
        )
        .param("x", x)
        .param("tail", "backward")
        .param_q("tol", tol)),
        Ok(m_bwd) => Ok(Verdict::holds(op, horizon, 0)
            .param("x", x)
            .param_q("tol", tol)
            .param("m", m_fwd.max(m_bwd))
            .param("omega", &fwd[horizon as usize])
            .param("alpha", &bwd[horizon as usize])),
    }
}

/// Membership of `z` in `A(x, y, n, m)`: `max(d(f^-i z, x), d(f^i z, y)) <= 1/n` for `m <= i <= T`.
pub fn convergence_set_membership(
    system: &System,
    z: &PointValue,
    x: &PointValue,
    y: &PointValue,
    n: u64,
    m: u64,
    horizon: u64,
) -> Result<Verdict> {
    require_invertible(system)?;
    if n == 0 {
        return Err(DynError::InvalidParameter("n must be positive".into()));
    }
    let bound = Real::Exact(rat(1, n as i64));
    let op = "convergence_set_membership";
    for i in m as i64..=horizon as i64 {
        for (t, target) in [(-i, x), (i, y)] {
            let zi = system.iterate(z, t)?;
            let d = system.distance(&zi, target)?;
            if !d.le(&bound) {
                return Ok(Verdict::fails(op, Witness::Index { index: t, distance: d }, horizon, 0)
                    .param("n", n)
                    .param("m", m));
            }
        }
    }
    Ok(Verdict::holds(op, horizon, 0).param("n", n).param("m", m))
}

/// Whether `y` is forward asymptotic to `p` and backward asymptotic to `q` from some
/// `N <= T/2` on, within `tol`.
pub fn asymptotic_pair_check(
    system: &System,
    y: &PointValue,
    p: &PointValue,
    q: &PointValue,
    horizon: u64,
    tol: &Rational,
) -> Result<Verdict> {
    require_invertible(system)?;
    for pt in [y, p, q] {
        system.check_point(pt)?;
    }
    let tol_r = Real::Exact(tol.clone());
    let t = horizon as i64;
    let fwd: Vec<i64> = (0..=t).collect();
    let bwd: Vec<i64> = (0..=t).map(|i| -i).collect();
    let (yf, pf) = (orbit_at(system, y, &fwd)?, orbit_at(system, p, &fwd)?);
    let (yb, qb) = (orbit_at(system, y, &bwd)?, orbit_at(system, q, &bwd)?);
    // Last index at which each side is violated.
    let mut last_bad: Option<(i64, Real)> = None;
    let mut last_fwd = -1i64;
    let mut last_bwd = -1i64;
    for i in 0..=t as usize {
        let d = system.distance(&yf[i], &pf[i])?;
        if !d.le(&tol_r) {
            last_fwd = i as i64;
            if i as i64 >= t / 2 {
                last_bad.get_or_insert((i as i64, d));
            }
        }
        let d = system.distance(&yb[i], &qb[i])?;
        if !d.le(&tol_r) {
            last_bwd = i as i64;
            if i as i64 >= t / 2 {
                last_bad.get_or_insert((-(i as i64), d));
            }
        }
    }
    let n = last_fwd.max(last_bwd) + 1;
    let op = "asymptotic_pair";
    let v = match last_bad {
        None => Verdict::holds(op, horizon, 0).param("n", n),
        Some((index, distance)) => Verdict::fails(op, Witness::Index { index, distance }, horizon, 0),
    };
    Ok(v.param("y", y).param("p", p).param("q", q).param_q("tol", tol))
}

/// Whether no candidate other than `x` lies in the horizon-`T` local unstable set.
pub fn sink_check(system: &System, x: &PointValue, delta: &Rational, horizon: u64, budget: usize, seed: u64) -> Result<Verdict> {
    require_invertible(system)?;
    let times: Vec<i64> = (0..=horizon as i64).map(|i| -i).collect();
    let d = Real::Exact(delta.clone());
    for y in neighbours(system, x, delta, budget, seed)? {
        if horizon_violation(system, x, &y, &d, &times)?.is_none() {
            let dist = system.distance(x, &y)?;
            return Ok(Verdict::fails(
                "sink",
                Witness::Point {
                    point: y,
                    index: None,
                    distance: Some(dist),
                },
                horizon,
                seed,
            )
            .param("x", x)
            .param_q("delta", delta));
        }
    }
    Ok(Verdict::holds("sink", horizon, seed)
        .param("x", x)
        .param_q("delta", delta)
        .param("budget", budget))
}

/// A point of `W^s(x, eps) ∩ W^u(y, eps)` at horizon `T`, exact on the full shift.
pub fn canonical_point(
    system: &System,
    x: &PointValue,
    y: &PointValue,
    eps: &Rational,
    horizon: u64,
    budget: usize,
    seed: u64,
) -> Result<Option<PointValue>> {
    let in_both = |z: &PointValue| -> Result<bool> {
        Ok(local_stable_membership(system, z, x, eps, horizon)?.outcome.holds()
            && local_unstable_membership(system, z, y, eps, horizon)?.outcome.holds())
    };
    if let (SystemKind::FullShift { .. }, PointValue::BiSeq(a), PointValue::BiSeq(b)) = (system.kind(), x, y) {
        // Future of x, past of y.
        let z = PointValue::BiSeq(BiSeq::splice(b, 0, a));
        return Ok(if in_both(&z)? { Some(z) } else { None });
    }
    let mut cands = vec![y.clone(), x.clone()];
    cands.extend(neighbours(system, x, eps, budget, seed)?);
    for z in cands {
        if in_both(&z)? {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

/// Searches the grid for a `delta` such that every sampled pair with `d(x, y) < delta` has
/// a point in `W^s(x, eps) ∩ W^u(y, eps)`. Pairs with `d(x, y) > 2 eps` certify an empty
/// intersection.
pub fn canonical_coordinates_check(
    system: &System,
    eps: &Rational,
    delta_grid: &[Rational],
    pair_budget: usize,
    horizon: u64,
    seed: u64,
) -> Result<Verdict> {
    require_invertible(system)?;
    if !eps.is_positive() || delta_grid.is_empty() {
        return Err(DynError::InvalidParameter("need eps > 0 and a non-empty delta grid".into()));
    }
    let op = "canonical_coordinates";
    let two_eps = Real::Exact(eps * rat(2, 1));
    let xs = system.sample(&system.whole_region(), pair_budget.max(1), seed)?;
    let mut last_failure = None;
    let mut parts = Vec::new();
    for (gi, delta) in delta_grid.iter().enumerate() {
        let mut certified_empty = None;
        let mut unresolved = 0usize;
        for (i, x) in xs.iter().enumerate() {
            let ball = Region::ball(x.clone(), delta.clone());
            let pair_seed = shard_seed(seed, (gi * xs.len() + i) as u64 + 1);
            let mut ys = vec![x.clone()];
            match system.sample(&ball, 1, pair_seed) {
                Ok(s) => ys.extend(s),
                Err(DynError::EmptyRegion) => {}
                Err(e) => return Err(e),
            }
            if let Ok(ns) = neighbours(system, x, &(delta * rat(1, 2)), 4, pair_seed) {
                ys.extend(ns.into_iter().take(1));
            }
            for other in xs.iter().skip(i + 1) {
                if ys.len() >= 5 {
                    break;
                }
                if system.distance(x, other)?.lt(&Real::Exact(delta.clone())) {
                    ys.push(other.clone());
                }
            }
            for y in ys {
                let d = system.distance(x, &y)?;
                if !d.lt(&Real::Exact(delta.clone())) {
                    continue;
                }
                if two_eps.lt(&d) {
                    certified_empty.get_or_insert((x.clone(), y.clone(), d));
                    continue;
                }
                if canonical_point(system, x, &y, eps, horizon, 16, pair_seed)?.is_none() {
                    unresolved += 1;
                }
            }
        }
        match certified_empty {
            Some((x, y, d)) => {
                parts.push(Verdict::fails(
                    op,
                    Witness::Pair {
                        first: x.clone(),
                        second: y.clone(),
                        index: 0,
                        distance: d.clone(),
                    },
                    horizon,
                    seed,
                )
                .param_q("delta", delta));
                last_failure = Some((x, y, d, delta.clone()));
            }
            None if unresolved == 0 => {
                return Ok(Verdict::holds(op, horizon, seed)
                    .param_q("eps", eps)
                    .param_q("delta", delta)
                    .param("pairs", xs.len()));
            }
            None => parts.push(Verdict::inconclusive(op, horizon, seed).param_q("delta", delta).param("unresolved", unresolved)),
        }
    }
    let all_failed = parts.iter().all(|p| p.outcome.fails());
    let v = match (all_failed, last_failure) {
        (true, Some((x, y, d, delta))) => Verdict::fails(
            op,
            Witness::Pair {
                first: x,
                second: y,
                index: 0,
                distance: d,
            },
            horizon,
            seed,
        )
        .param_q("delta", &delta),
        _ => Verdict::inconclusive(op, horizon, seed),
    };
    Ok(v.param_q("eps", eps).with_parts(parts))
}

/// For each periodic point of period at most `period_bound`, finds a grid `delta` whose
/// horizon-`T` ball holds no other enumerated periodic point.
pub fn periodic_restriction_expansivity(
    system: &System,
    delta_grid: &[Rational],
    period_bound: u32,
    horizon: u64,
) -> Result<Verdict> {
    if !system.capabilities().enumerates_periodic {
        return Err(DynError::CapabilityMissing {
            system: system.id().into(),
            capability: "enumerates_periodic",
        });
    }
    if delta_grid.is_empty() || period_bound == 0 {
        return Err(DynError::InvalidParameter("need a non-empty grid and period_bound >= 1".into()));
    }
    let mut points: Vec<PointValue> = Vec::new();
    let mut complete = true;
    for n in 1..=period_bound {
        let pp = system.periodic_points(n)?;
        complete &= pp.complete;
        for p in pp.points {
            if !points.contains(&p) {
                points.push(p);
            }
        }
    }
    let times = default_window(system, horizon).times();
    let largest = delta_grid.iter().max().unwrap().clone();
    let op = "periodic_restriction_expansivity";
    let mut worst: Option<Rational> = None;
    for p in &points {
        let mut near: Vec<(&PointValue, Real)> = Vec::new();
        for q in &points {
            if q != p {
                let d = system.distance(p, q)?;
                if d.le(&Real::Exact(largest.clone())) {
                    near.push((q, d));
                }
            }
        }
        let mut found = None;
        let mut witness = None;
        for delta in delta_grid {
            let dr = Real::Exact(delta.clone());
            let mut blocker = None;
            for (q, d) in &near {
                if d.le(&dr) && horizon_violation(system, p, q, &dr, &times)?.is_none() {
                    blocker = Some(((*q).clone(), d.clone()));
                    break;
                }
            }
            match blocker {
                None => {
                    found = Some(delta.clone());
                    break;
                }
                Some(b) => witness = Some(b),
            }
        }
        match found {
            Some(d) => worst = Some(worst.map_or(d.clone(), |w: Rational| w.min(d))),
            None => {
                let (q, d) = witness.expect("a blocking point");
                return Ok(Verdict::fails(
                    op,
                    Witness::Pair {
                        first: p.clone(),
                        second: q,
                        index: 0,
                        distance: d,
                    },
                    horizon,
                    0,
                )
                .param("points", points.len())
                .param("period_bound", period_bound));
            }
        }
    }
    let v = Verdict::holds(op, horizon, 0)
        .param("points", points.len())
        .param("period_bound", period_bound)
        .param("complete_enumeration", complete);
    Ok(match worst {
        Some(w) => v.param_q("smallest_delta", &w),
        None => v,
    })
}
