//! Separated sets, growth-rate estimates of `s_n(eps, K)`, and entropy lower bounds built
//! from two specification points.

use std::collections::BTreeMap;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{DynError, Result};
use crate::point::{PointValue, Scalar};
use crate::real::{format_rational, rat, Rational, Real, FLOAT_TOL};
use crate::sampling::shard_seed;
use crate::shadowing::{trace_targets, TraceOutcome};
use crate::symbolic::{closed_agreement_radius, BiSeq, OneSidedSeq};
use crate::systems::{words, Region, System, SystemDescriptor, SystemKind};

/// Largest candidate set handed to the exact search.
pub const EXACT_CANDIDATE_LIMIT: usize = 1 << 16;
/// Branch-and-bound nodes allowed per exact search.
const NODE_BUDGET: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maximality {
    /// One pass keeping every candidate separated from those already kept.
    GreedyMaximal,
    /// A maximum separated subset of the candidates.
    ExactMaximum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatedSet {
    pub points: Vec<PointValue>,
    pub n: u64,
    #[serde(with = "crate::real::rational_string")]
    pub epsilon: Rational,
    pub maximality: Maximality,
}

impl SeparatedSet {
    /// Re-checks `max_{i<n} d(f^i p, f^i q) > eps` for every pair.
    pub fn verify(&self, system: &System) -> Result<bool> {
        let orbits: Vec<Vec<PointValue>> = self
            .points
            .iter()
            .map(|p| system.orbit(p, self.n as usize - 1))
            .collect::<Result<_>>()?;
        let eps = Real::Exact(self.epsilon.clone());
        for a in 0..orbits.len() {
            for b in a + 1..orbits.len() {
                let mut sep = false;
                for i in 0..self.n as usize {
                    if separated(&system.distance(&orbits[a][i], &orbits[b][i])?, &eps) {
                        sep = true;
                        break;
                    }
                }
                if !sep {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// `d > eps`, with floats required to clear `eps` by [`FLOAT_TOL`].
fn separated(d: &Real, eps: &Real) -> bool {
    match (d, eps) {
        (Real::Exact(a), Real::Exact(b)) => a > b,
        _ => d.to_f64() > eps.to_f64() + FLOAT_TOL,
    }
}

/// The compact set `K` as a finite list of candidates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Compact {
    /// One point per word on coordinates `[0, n)`, zeros elsewhere (shifts).
    Words {},
    /// `points` equally spaced points of `[lo, hi]`, both ends included.
    Grid {
        #[serde(with = "crate::real::rational_string")]
        lo: Rational,
        #[serde(with = "crate::real::rational_string")]
        hi: Rational,
        points: usize,
    },
    /// Seeded samples of a region.
    Sample { region: Region, budget: usize, seed: u64 },
}

impl Compact {
    pub fn candidates(&self, system: &System, n: u64) -> Result<Vec<PointValue>> {
        match self {
            Compact::Words {} => {
                let alphabet = system.alphabet().ok_or_else(|| DynError::CapabilityMissing {
                    system: system.id().into(),
                    capability: "exact_symbolic",
                })?;
                let one_sided = matches!(system.kind(), SystemKind::OneSidedShift { .. });
                Ok(words(alphabet, n as usize)?
                    .into_iter()
                    .map(|w| {
                        if one_sided {
                            PointValue::OneSided(OneSidedSeq::new(w, vec![0]).expect("non-empty tail"))
                        } else {
                            PointValue::BiSeq(BiSeq::from_window(0, &w, 0))
                        }
                    })
                    .collect())
            }
            Compact::Grid { lo, hi, points } => {
                if *points < 2 || hi < lo {
                    return Err(DynError::InvalidParameter("grids need two points and lo <= hi".into()));
                }
                let step = (hi - lo) / Rational::from_integer((*points as i64 - 1).into());
                let pts: Vec<PointValue> = (0..*points)
                    .map(|k| PointValue::exact(lo + &step * Rational::from_integer((k as i64).into())))
                    .filter(|p| system.contains(p))
                    .collect();
                Ok(pts)
            }
            Compact::Sample { region, budget, seed } => system.sample(region, *budget, *seed),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Compact::Words {} => "words".into(),
            Compact::Grid { lo, hi, points } => format!("grid[{},{}]x{points}", format_rational(lo), format_rational(hi)),
            Compact::Sample { budget, seed, .. } => format!("sample x{budget} seed {seed}"),
        }
    }
}

/// Orbit data reduced to what the separation test needs.
enum Orbits {
    /// Two candidates are separated iff their keys differ.
    Keys(Vec<Vec<u8>>),
    Floats { orbits: Vec<Vec<f64>>, circle: bool },
    Points(Vec<Vec<PointValue>>),
}

impl Orbits {
    fn build(system: &System, cands: &[PointValue], n: u64, eps: &Rational) -> Result<Orbits> {
        match system.kind() {
            SystemKind::FullShift { .. } | SystemKind::OneSidedShift { .. } => {
                // d(f^i p, f^i q) > eps for some i < n iff p and q differ on the union of the
                // agreement windows [i - R, i + R].
                let Some(r) = closed_agreement_radius(eps) else {
                    return Ok(Orbits::Keys(vec![Vec::new(); cands.len()]));
                };
                let r = r as i64;
                let hi = n as i64 - 1 + r;
                let keys = cands
                    .iter()
                    .map(|p| match p {
                        PointValue::BiSeq(s) => Ok(s.window(-r, hi)),
                        PointValue::OneSided(s) => Ok(s.window(0, hi as u64)),
                        _ => Err(DynError::MixedSystemPoints),
                    })
                    .collect::<Result<_>>()?;
                Ok(Orbits::Keys(keys))
            }
            _ if system.pieces().is_ok() => {
                let circle = matches!(system.kind(), SystemKind::DoublingCircle);
                let orbits = cands
                    .iter()
                    .map(|p| {
                        let v = match p {
                            PointValue::Scalar(s) => s.to_f64(),
                            _ => return Err(DynError::MixedSystemPoints),
                        };
                        Ok(system
                            .orbit(&PointValue::float(v), n as usize - 1)?
                            .iter()
                            .map(|q| match q {
                                PointValue::Scalar(Scalar::Float(f)) => *f,
                                PointValue::Scalar(s) => s.to_f64(),
                                _ => f64::NAN,
                            })
                            .collect())
                    })
                    .collect::<Result<_>>()?;
                Ok(Orbits::Floats { orbits, circle })
            }
            _ => Ok(Orbits::Points(
                cands
                    .iter()
                    .map(|p| system.orbit(p, n as usize - 1))
                    .collect::<Result<_>>()?,
            )),
        }
    }

    fn separated(&self, system: &System, a: usize, b: usize, eps: &Rational) -> Result<bool> {
        Ok(match self {
            Orbits::Keys(k) => k[a] != k[b],
            Orbits::Floats { orbits, circle } => {
                let e = crate::real::to_f64(eps) + FLOAT_TOL;
                orbits[a].iter().zip(&orbits[b]).any(|(x, y)| {
                    let d = (x - y).abs();
                    let d = if *circle { d.min(1.0 - d) } else { d };
                    d > e
                })
            }
            Orbits::Points(o) => {
                let e = Real::Exact(eps.clone());
                for (x, y) in o[a].iter().zip(&o[b]) {
                    if separated(&system.distance(x, y)?, &e) {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }
}

fn greedy(system: &System, orbits: &Orbits, count: usize, eps: &Rational, seed_set: &[usize]) -> Result<Vec<usize>> {
    let mut kept: Vec<usize> = seed_set.to_vec();
    for c in 0..count {
        if kept.contains(&c) {
            continue;
        }
        let mut ok = true;
        for &k in &kept {
            if !orbits.separated(system, c, k, eps)? {
                ok = false;
                break;
            }
        }
        if ok {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    Ok(kept)
}

fn exact(system: &System, orbits: &Orbits, count: usize, eps: &Rational) -> Result<Vec<usize>> {
    if count > EXACT_CANDIDATE_LIMIT {
        return Err(DynError::BudgetExceeded(format!("{count} candidates exceed {EXACT_CANDIDATE_LIMIT}")));
    }
    if let Orbits::Keys(keys) = orbits {
        // The conflict graph is a disjoint union of cliques, one per key: a maximum independent
        // set takes one member of each.
        let mut first: BTreeMap<&[u8], usize> = BTreeMap::new();
        for (i, k) in keys.iter().enumerate() {
            first.entry(k.as_slice()).or_insert(i);
        }
        let mut out: Vec<usize> = first.into_values().collect();
        out.sort_unstable();
        return Ok(out);
    }
    let mut adj = vec![Vec::new(); count];
    for a in 0..count {
        for b in a + 1..count {
            if !orbits.separated(system, a, b, eps)? {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    max_independent_set(&adj, NODE_BUDGET)
}

/// Maximum independent set by branch and bound; ties keep the first set found.
pub fn max_independent_set(adj: &[Vec<usize>], node_budget: u64) -> Result<Vec<usize>> {
    struct Search<'a> {
        adj: &'a [Vec<usize>],
        best: Vec<usize>,
        nodes: u64,
        budget: u64,
    }
    impl Search<'_> {
        fn go(&mut self, cands: Vec<usize>, current: &mut Vec<usize>) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(DynError::BudgetExceeded(format!("{} branch-and-bound nodes", self.budget)));
            }
            let n = self.adj.len();
            let mut live = vec![false; n];
            for &c in &cands {
                live[c] = true;
            }
            let degree = |v: usize, live: &[bool]| self.adj[v].iter().filter(|&&u| live[u]).count();
            // Isolated candidates always belong to some maximum set.
            let mut rest = Vec::with_capacity(cands.len());
            let pushed = current.len();
            for &c in &cands {
                if degree(c, &live) == 0 {
                    current.push(c);
                    live[c] = false;
                } else {
                    rest.push(c);
                }
            }
            if current.len() + rest.len() <= self.best.len() {
                current.truncate(pushed);
                return Ok(());
            }
            if rest.is_empty() {
                self.best = current.clone();
                current.truncate(pushed);
                return Ok(());
            }
            let v = *rest.iter().max_by_key(|&&v| (degree(v, &live), std::cmp::Reverse(v))).unwrap();
            let without_nbrs: Vec<usize> = rest.iter().copied().filter(|&u| u != v && !self.adj[v].contains(&u)).collect();
            current.push(v);
            self.go(without_nbrs, current)?;
            current.pop();
            let without_v: Vec<usize> = rest.iter().copied().filter(|&u| u != v).collect();
            self.go(without_v, current)?;
            current.truncate(pushed);
            Ok(())
        }
    }
    let mut s = Search {
        adj,
        best: Vec::new(),
        nodes: 0,
        budget: node_budget,
    };
    s.go((0..adj.len()).collect(), &mut Vec::new())?;
    let mut best = s.best;
    best.sort_unstable();
    Ok(best)
}

fn check_params(n: u64, eps: &Rational) -> Result<()> {
    if n == 0 || !eps.is_positive() {
        return Err(DynError::InvalidParameter("need n >= 1 and eps > 0".into()));
    }
    Ok(())
}

/// An `(n, eps)`-separated subset of the candidates drawn from `K`.
pub fn separated_set(system: &System, k: &Compact, n: u64, eps: &Rational, mode: Maximality) -> Result<SeparatedSet> {
    check_params(n, eps)?;
    let cands = k.candidates(system, n)?;
    let orbits = Orbits::build(system, &cands, n, eps)?;
    let idx = match mode {
        Maximality::GreedyMaximal => greedy(system, &orbits, cands.len(), eps, &[])?,
        Maximality::ExactMaximum => exact(system, &orbits, cands.len(), eps)?,
    };
    Ok(SeparatedSet {
        points: idx.into_iter().map(|i| cands[i].clone()).collect(),
        n,
        epsilon: eps.clone(),
        maximality: mode,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    #[serde(with = "crate::real::rational_string")]
    pub epsilon: Rational,
    pub n: u64,
    pub count: u64,
    /// `log(count) / n`.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    #[serde(with = "crate::real::rational_string")]
    pub epsilon: Rational,
    /// Least-squares slope of `log s_n` against `n` on the upper half of the tested range.
    pub slope: f64,
    /// Root-mean-square residual of that fit.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub system: String,
    pub compact: String,
    pub maximality: Maximality,
    pub n_max: u64,
    pub rows: Vec<EntropyRow>,
    pub fits: Vec<RateFit>,
    /// Largest fitted slope over the schedule.
    pub rate: f64,
    /// Residual of the fit giving `rate`.
    pub residual: f64,
}

impl EntropyEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,n,s_n,rate\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:.12}\n", format_rational(&r.epsilon), r.n, r.count, r.rate));
        }
        out
    }
}

/// `ε-schedule` default `2^-1, ..., 2^-8`.
pub fn default_schedule() -> Vec<Rational> {
    (1..=8).map(|k| crate::real::pow2(-k)).collect()
}

fn fit(points: &[(f64, f64)]) -> (f64, f64) {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = points.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    (slope, (rss / m).sqrt())
}

/// Table of `s_n(eps, K)` for every `eps` in the (strictly decreasing) schedule and
/// `1 <= n <= n_max`. Greedy passes at a smaller `eps` start from the set kept at the previous
/// one, so counts never drop as `eps` shrinks.
pub fn entropy_estimate(system: &System, k: &Compact, schedule: &[Rational], n_max: u64, mode: Maximality) -> Result<EntropyEstimate> {
    if n_max < 2 || schedule.is_empty() {
        return Err(DynError::InvalidParameter("need n_max >= 2 and a schedule".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) || !schedule.last().unwrap().is_positive() {
        return Err(DynError::InvalidParameter("schedule must decrease and stay positive".into()));
    }
    let mut rows = Vec::new();
    let mut counts: BTreeMap<(usize, u64), u64> = BTreeMap::new();
    for n in 1..=n_max {
        let cands = k.candidates(system, n)?;
        let mut prev: Vec<usize> = Vec::new();
        for (e, eps) in schedule.iter().enumerate() {
            let orbits = Orbits::build(system, &cands, n, eps)?;
            let idx = match mode {
                Maximality::GreedyMaximal => greedy(system, &orbits, cands.len(), eps, &prev)?,
                Maximality::ExactMaximum => exact(system, &orbits, cands.len(), eps)?,
            };
            counts.insert((e, n), idx.len() as u64);
            prev = idx;
        }
    }
    for (e, eps) in schedule.iter().enumerate() {
        for n in 1..=n_max {
            let c = counts[&(e, n)];
            rows.push(EntropyRow {
                epsilon: eps.clone(),
                n,
                count: c,
                rate: (c.max(1) as f64).ln() / n as f64,
            });
        }
    }
    let lo = (n_max / 2).max(1);
    let fits: Vec<RateFit> = schedule
        .iter()
        .enumerate()
        .map(|(e, eps)| {
            let pts: Vec<(f64, f64)> = (lo..=n_max).map(|n| (n as f64, (counts[&(e, n)].max(1) as f64).ln())).collect();
            let (slope, residual) = fit(&pts);
            RateFit {
                epsilon: eps.clone(),
                slope,
                residual,
            }
        })
        .collect();
    let best = fits
        .iter()
        .fold(None::<&RateFit>, |b, f| match b {
            Some(b) if b.slope >= f.slope => Some(b),
            _ => Some(f),
        })
        .unwrap();
    Ok(EntropyEstimate {
        system: system.id().into(),
        compact: k.label(),
        maximality: mode,
        n_max,
        rate: best.slope.max(0.0),
        residual: best.residual,
        rows,
        fits,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationWitness {
    pub first: usize,
    pub second: usize,
    pub index: u64,
    pub distance: Real,
}

/// `2^{n+1}` tracers of the target patterns `x/y` at times `0, M, ..., nM`, pairwise
/// `((n+1)M, eps)`-separated, giving the entropy lower bound `log 2 / M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyCertificate {
    pub system: SystemDescriptor,
    pub x: PointValue,
    pub y: PointValue,
    #[serde(with = "crate::real::rational_string")]
    pub epsilon: Rational,
    pub gap: u64,
    pub n: u64,
    /// Pattern of each tracer, one letter (`x` or `y`) per time `iM`.
    pub patterns: Vec<String>,
    pub family: Vec<PointValue>,
    pub witnesses: Vec<SeparationWitness>,
    pub bound: f64,
    pub bound_expr: String,
}

fn pattern(t: usize, n: u64) -> String {
    let len = n as usize + 1;
    (0..len)
        .map(|i| if (t >> (len - 1 - i)) & 1 == 0 { 'x' } else { 'y' })
        .collect()
}

fn pattern_targets(pat: &str, x: &PointValue, y: &PointValue, m: u64) -> Vec<(u64, PointValue)> {
    pat.chars()
        .enumerate()
        .map(|(i, c)| (i as u64 * m, if c == 'x' { x.clone() } else { y.clone() }))
        .collect()
}

fn first_separation(system: &System, a: &[PointValue], b: &[PointValue], eps: &Real) -> Result<Option<(u64, Real)>> {
    for (i, (p, q)) in a.iter().zip(b).enumerate() {
        let d = system.distance(p, q)?;
        if separated(&d, eps) {
            return Ok(Some((i as u64, d)));
        }
    }
    Ok(None)
}

/// Builds the certificate. Each pattern asks the tracer to be within `eps` of `x` or `y` at
/// times `iM`; patterns are ordered so the first half starts at `x`.
pub fn entropy_certificate_from_spec_points(
    system: &System,
    x: &PointValue,
    y: &PointValue,
    eps: &Rational,
    gap: u64,
    n: u64,
    seed: u64,
) -> Result<EntropyCertificate> {
    if x == y {
        return Err(DynError::InvalidParameter("x and y must differ".into()));
    }
    if gap == 0 || !eps.is_positive() || n > 20 {
        return Err(DynError::InvalidParameter("need M >= 1, eps > 0 and n <= 20".into()));
    }
    let three = Real::Exact(eps * rat(3, 1));
    if !separated(&system.distance(x, y)?, &three) {
        return Err(DynError::InvalidParameter("need d(x, y) > 3 eps".into()));
    }
    let total = 1usize << (n + 1);
    let span = ((n + 1) * gap) as usize;
    let mut patterns = Vec::with_capacity(total);
    let mut family = Vec::with_capacity(total);
    for t in 0..total {
        let pat = pattern(t, n);
        let targets = pattern_targets(&pat, x, y, gap);
        match trace_targets(system, &targets, eps, shard_seed(seed, t as u64))? {
            TraceOutcome::Traced(r) => family.push(r.tracer),
            TraceOutcome::Failed(_) => return Err(DynError::TracerUnavailable(t)),
        }
        patterns.push(pat);
    }
    let orbits: Vec<Vec<PointValue>> = family.iter().map(|z| system.orbit(z, span - 1)).collect::<Result<_>>()?;
    let e = Real::Exact(eps.clone());
    let mut witnesses = Vec::with_capacity(total * (total - 1) / 2);
    for a in 0..total {
        for b in a + 1..total {
            match first_separation(system, &orbits[a], &orbits[b], &e)? {
                Some((index, distance)) => witnesses.push(SeparationWitness {
                    first: a,
                    second: b,
                    index,
                    distance,
                }),
                None => return Err(DynError::SeparationFailure { first: a, second: b }),
            }
        }
    }
    Ok(EntropyCertificate {
        system: system.descriptor(),
        x: x.clone(),
        y: y.clone(),
        epsilon: eps.clone(),
        gap,
        n,
        patterns,
        family,
        witnesses,
        bound: std::f64::consts::LN_2 / gap as f64,
        bound_expr: format!("log(2)/{gap}"),
    })
}

/// Re-checks a certificate from its own data; returns the list of problems found.
pub fn verify_entropy_certificate(cert: &EntropyCertificate) -> Result<Vec<String>> {
    let system = cert.system.build()?;
    let mut problems = Vec::new();
    let eps = Real::Exact(cert.epsilon.clone());
    let total = 1usize << (cert.n + 1);
    let span = ((cert.n + 1) * cert.gap) as usize;
    if cert.x == cert.y || !separated(&system.distance(&cert.x, &cert.y)?, &Real::Exact(&cert.epsilon * rat(3, 1))) {
        problems.push("d(x, y) <= 3 eps".to_string());
    }
    if cert.family.len() != total || cert.patterns.len() != total {
        problems.push(format!("expected {total} tracers"));
        return Ok(problems);
    }
    for (t, (pat, z)) in cert.patterns.iter().zip(&cert.family).enumerate() {
        if *pat != pattern(t, cert.n) {
            problems.push(format!("pattern {t} is out of order"));
        }
        system.check_point(z)?;
        for (time, target) in pattern_targets(pat, &cert.x, &cert.y, cert.gap) {
            let d = system.distance(&system.iterate(z, time as i64)?, &target)?;
            if !d.lt(&eps) {
                problems.push(format!("tracer {t} misses its target at time {time}"));
            }
        }
    }
    let mut seen = vec![false; total * total];
    let orbits: Vec<Vec<PointValue>> = cert.family.iter().map(|z| system.orbit(z, span - 1)).collect::<Result<_>>()?;
    for w in &cert.witnesses {
        if w.first >= w.second || w.second >= total || w.index as usize >= span {
            problems.push(format!("malformed witness {}-{}", w.first, w.second));
            continue;
        }
        seen[w.first * total + w.second] = true;
        let d = system.distance(&orbits[w.first][w.index as usize], &orbits[w.second][w.index as usize])?;
        if d != w.distance || !separated(&d, &eps) {
            problems.push(format!("witness {}-{} does not separate", w.first, w.second));
        }
    }
    let missing = (0..total)
        .flat_map(|a| (a + 1..total).map(move |b| (a, b)))
        .filter(|(a, b)| !seen[a * total + b])
        .count();
    if missing > 0 {
        problems.push(format!("{missing} pairs lack a witness"));
    }
    if (cert.bound - std::f64::consts::LN_2 / cert.gap as f64).abs() > FLOAT_TOL {
        problems.push("bound differs from log 2 / M".to_string());
    }
    Ok(problems)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::{int, pow2};

    /// Brute force over all pairs with the true metric.
    fn brute_force_separated(system: &System, pts: &[PointValue], n: u64, eps: &Rational) -> bool {
        let set = SeparatedSet {
            points: pts.to_vec(),
            n,
            epsilon: eps.clone(),
            maximality: Maximality::ExactMaximum,
        };
        set.verify(system).unwrap()
    }

    #[test]
    fn shift_words_are_separated() {
        let shift = System::full_shift(2);
        for n in 1..=8 {
            let s = separated_set(&shift, &Compact::Words {}, n, &rat(1, 2), Maximality::ExactMaximum).unwrap();
            assert_eq!(s.points.len(), 1 << n);
            assert!(brute_force_separated(&shift, &s.points, n, &rat(1, 2)));
        }
    }

    #[test]
    fn greedy_never_beats_exact() {
        let id = System::identity();
        let k = Compact::Grid {
            lo: int(0),
            hi: int(1),
            points: 11,
        };
        for eps in [rat(1, 20), rat(1, 7), rat(1, 3)] {
            let g = separated_set(&id, &k, 2, &eps, Maximality::GreedyMaximal).unwrap();
            let e = separated_set(&id, &k, 2, &eps, Maximality::ExactMaximum).unwrap();
            assert!(g.points.len() <= e.points.len());
            assert!(g.verify(&id).unwrap() && e.verify(&id).unwrap());
        }
        let all = separated_set(&id, &k, 3, &rat(1, 20), Maximality::GreedyMaximal).unwrap();
        assert_eq!(all.points.len(), 11);
        let one = separated_set(&id, &k, 1, &int(2), Maximality::ExactMaximum).unwrap();
        assert_eq!(one.points.len(), 1);
    }

    #[test]
    fn independent_sets_on_small_graphs() {
        // 5-cycle: maximum independent set has 2 vertices.
        let cycle: Vec<Vec<usize>> = (0..5).map(|i| vec![(i + 4) % 5, (i + 1) % 5]).collect();
        assert_eq!(max_independent_set(&cycle, 1000).unwrap().len(), 2);
        // Star: the leaves.
        let mut star = vec![vec![1, 2, 3, 4]];
        star.extend((1..5).map(|_| vec![0]));
        assert_eq!(max_independent_set(&star, 1000).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn shift_rate_is_log_two() {
        let shift = System::full_shift(2);
        let est = entropy_estimate(&shift, &Compact::Words {}, &[rat(1, 2)], 8, Maximality::ExactMaximum).unwrap();
        assert!((est.rate - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(est.residual < 1e-12);
        assert!(est.to_csv().starts_with("epsilon,n,s_n,rate\n1/2,1,2,"));
    }

    #[test]
    fn squaring_rate_is_small() {
        let sq = System::squaring();
        let k = Compact::Grid {
            lo: int(0),
            hi: int(1),
            points: 257,
        };
        let est = entropy_estimate(&sq, &k, &default_schedule(), 16, Maximality::GreedyMaximal).unwrap();
        assert!(est.rate <= 0.02, "{}", est.rate);
        for n in 1..=16 {
            let col: Vec<u64> = est.rows.iter().filter(|r| r.n == n).map(|r| r.count).collect();
            assert!(col.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn line_rate_is_positive() {
        let line = System::doubling_line();
        let k = Compact::Grid {
            lo: int(0),
            hi: int(1),
            points: 1025,
        };
        let est = entropy_estimate(&line, &k, &[pow2(-3)], 6, Maximality::GreedyMaximal).unwrap();
        assert!((est.rate - std::f64::consts::LN_2).abs() < 0.1, "{}", est.rate);
    }

    #[test]
    fn certificate_round_trip() {
        let shift = System::full_shift(2);
        let x: PointValue = "(0)(0)@0".parse().unwrap();
        let y: PointValue = "(1)(1)@0".parse().unwrap();
        let cert = entropy_certificate_from_spec_points(&shift, &x, &y, &rat(3, 10), 4, 3, 0).unwrap();
        assert_eq!(cert.family.len(), 16);
        assert!(verify_entropy_certificate(&cert).unwrap().is_empty());
        let json = serde_json::to_string(&cert).unwrap();
        let back: EntropyCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
        let mut bad = cert.clone();
        bad.family.swap(0, 1);
        assert!(!verify_entropy_certificate(&bad).unwrap().is_empty());
        let zero = entropy_certificate_from_spec_points(&shift, &x, &y, &rat(3, 10), 4, 0, 0).unwrap();
        assert_eq!(zero.family.len(), 2);
        assert_eq!(zero.witnesses[0].index, 0);
        assert!(entropy_certificate_from_spec_points(&shift, &x, &x, &rat(3, 10), 4, 2, 0).is_err());
    }
}
