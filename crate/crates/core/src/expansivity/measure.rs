//! Invariant measures on shifts, measures of dynamical balls and the generator check.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DynError, Result};
use crate::point::PointValue;
use crate::real::{format_rational, int, Rational};
use crate::sampling::{shard_seed, wilson_interval};
use crate::symbolic::{closed_agreement_radius, open_agreement_radius};
use crate::systems::{Region, System, SystemKind};
use crate::verdict::{Verdict, Witness};

use super::{BallRepr, CylinderSet, DynamicalBall};

/// Most cover elements accepted by the generator check.
pub const MAX_COVER: usize = 8;
/// Largest horizon accepted by the generator check.
pub const MAX_GENERATOR_HORIZON: u64 = 10;
/// Most cover chains enumerated before giving up.
pub const MAX_CHAINS: usize = 1 << 20;
const SHARD: usize = 4096;
const COVER_SAMPLES: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureModel {
    /// Product measure with the given symbol probabilities.
    Bernoulli {
        #[serde(with = "crate::real::rational_vec")]
        probabilities: Vec<Rational>,
    },
    /// Stationary Markov measure: `stationary * matrix = stationary`.
    Markov {
        #[serde(with = "rational_matrix")]
        matrix: Vec<Vec<Rational>>,
        #[serde(with = "crate::real::rational_vec")]
        stationary: Vec<Rational>,
    },
    /// Monte-Carlo estimate with uniform samples from `region`.
    Empirical { region: Region, samples: usize, seed: u64 },
}

mod rational_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
        m.iter()
            .map(|row| row.iter().map(format_rational).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
        Vec::<Vec<String>>::deserialize(d)?
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| crate::real::parse_rational(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

fn probability_vector(v: &[Rational], what: &str) -> Result<()> {
    if v.len() < 2 {
        return Err(DynError::InvalidParameter(format!("{what} needs at least two symbols")));
    }
    if v.iter().any(|p| *p < Rational::zero()) {
        return Err(DynError::InvalidParameter(format!("{what} has a negative entry")));
    }
    let total: Rational = v.iter().cloned().sum();
    if total != Rational::one() {
        return Err(DynError::InvalidParameter(format!("{what} sums to {}", format_rational(&total))));
    }
    Ok(())
}

impl MeasureModel {
    pub fn bernoulli(probabilities: Vec<Rational>) -> Result<Self> {
        probability_vector(&probabilities, "probabilities")?;
        Ok(MeasureModel::Bernoulli { probabilities })
    }

    pub fn uniform(alphabet: u8) -> Self {
        MeasureModel::Bernoulli {
            probabilities: vec![Rational::new(1.into(), alphabet.into()); alphabet as usize],
        }
    }

    pub fn markov(matrix: Vec<Vec<Rational>>, stationary: Vec<Rational>) -> Result<Self> {
        probability_vector(&stationary, "stationary vector")?;
        let k = stationary.len();
        if matrix.len() != k {
            return Err(DynError::InvalidParameter("matrix size differs from the stationary vector".into()));
        }
        for row in &matrix {
            if row.len() != k {
                return Err(DynError::InvalidParameter("matrix is not square".into()));
            }
            probability_vector(row, "matrix row")?;
        }
        for j in 0..k {
            let s: Rational = (0..k).map(|i| &stationary[i] * &matrix[i][j]).sum();
            if s != stationary[j] {
                return Err(DynError::InvalidParameter("stationary vector is not invariant".into()));
            }
        }
        Ok(MeasureModel::Markov { matrix, stationary })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureModel::Bernoulli { probabilities } => probability_vector(probabilities, "probabilities"),
            MeasureModel::Markov { matrix, stationary } => Self::markov(matrix.clone(), stationary.clone()).map(|_| ()),
            MeasureModel::Empirical { samples, .. } => {
                if *samples == 0 {
                    Err(DynError::InvalidParameter("empirical measure needs samples".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn alphabet(&self) -> Option<usize> {
        match self {
            MeasureModel::Bernoulli { probabilities } => Some(probabilities.len()),
            MeasureModel::Markov { stationary, .. } => Some(stationary.len()),
            MeasureModel::Empirical { .. } => None,
        }
    }

    /// Largest probability of a single symbol or transition.
    pub fn max_symbol_probability(&self) -> Option<Rational> {
        match self {
            MeasureModel::Bernoulli { probabilities } => probabilities.iter().max().cloned(),
            MeasureModel::Markov { matrix, stationary } => stationary
                .iter()
                .chain(matrix.iter().flatten())
                .max()
                .cloned(),
            MeasureModel::Empirical { .. } => None,
        }
    }

    /// Exact measure of the set fixing the given coordinates.
    pub fn cylinder_measure(&self, constraints: &BTreeMap<i64, u8>) -> Result<Rational> {
        let k = self.alphabet().ok_or(DynError::MeasureSystemMismatch)?;
        if constraints.values().any(|&s| s as usize >= k) {
            return Ok(Rational::zero());
        }
        match self {
            MeasureModel::Bernoulli { probabilities } => Ok(constraints
                .values()
                .map(|&s| probabilities[s as usize].clone())
                .product()),
            MeasureModel::Markov { matrix, stationary } => {
                let mut it = constraints.iter();
                let Some((&c0, &s0)) = it.next() else {
                    return Ok(Rational::one());
                };
                let mut acc = stationary[s0 as usize].clone();
                let (mut prev_c, mut prev_s) = (c0, s0);
                for (&c, &s) in it {
                    let p = matrix_power(matrix, (c - prev_c) as u64);
                    acc *= &p[prev_s as usize][s as usize];
                    prev_c = c;
                    prev_s = s;
                }
                Ok(acc)
            }
            MeasureModel::Empirical { .. } => Err(DynError::MeasureSystemMismatch),
        }
    }
}

fn matrix_power(m: &[Vec<Rational>], n: u64) -> Vec<Vec<Rational>> {
    let k = m.len();
    let mut out: Vec<Vec<Rational>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    for _ in 0..n {
        out = (0..k)
            .map(|i| (0..k).map(|j| (0..k).map(|l| &out[i][l] * &m[l][j]).sum()).collect())
            .collect();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureValue {
    Exact {
        #[serde(with = "crate::real::rational_string")]
        value: Rational,
    },
    /// Wilson 95% interval `value ± half_width`.
    Estimate { value: f64, half_width: f64, samples: u64 },
}

impl MeasureValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            MeasureValue::Exact { value } => crate::real::to_f64(value),
            MeasureValue::Estimate { value, .. } => *value,
        }
    }
}

fn check_alphabet(system: &System, measure: &MeasureModel) -> Result<()> {
    match (system.alphabet(), measure.alphabet()) {
        (Some(a), Some(k)) if a as usize == k => Ok(()),
        (_, None) => Ok(()),
        _ => Err(DynError::MeasureSystemMismatch),
    }
}

/// Measure of a horizon-`T` ball: exact for cylinders under Bernoulli or Markov measures,
/// Monte-Carlo otherwise. Satellite points carry no mass, so a satellite ball weighs its base part.
pub fn measure_of_ball(system: &System, measure: &MeasureModel, ball: &DynamicalBall) -> Result<MeasureValue> {
    measure.validate()?;
    if let MeasureModel::Empirical { region, samples, seed } = measure {
        let mut hits = 0u64;
        let mut drawn = 0usize;
        let mut shard = 0u64;
        while drawn < *samples {
            let n = SHARD.min(samples - drawn);
            for y in system.sample(region, n, shard_seed(*seed, shard))? {
                if ball.admits(system, &y)? {
                    hits += 1;
                }
            }
            drawn += n;
            shard += 1;
        }
        let (value, half_width) = wilson_interval(hits, *samples as u64);
        return Ok(MeasureValue::Estimate {
            value,
            half_width,
            samples: *samples as u64,
        });
    }
    match &ball.repr {
        BallRepr::Cylinder { cylinder, .. } => {
            check_alphabet(system, measure)?;
            Ok(MeasureValue::Exact {
                value: measure.cylinder_measure(&cylinder.constraints().into_iter().collect())?,
            })
        }
        BallRepr::Satellite { base, .. } => {
            let sat = system.satellite().ok_or(DynError::MeasureSystemMismatch)?;
            check_alphabet(sat.base(), measure)?;
            let value = match base {
                Some(c) => measure.cylinder_measure(&c.constraints().into_iter().collect())?,
                None => Rational::zero(),
            };
            Ok(MeasureValue::Exact { value })
        }
        BallRepr::Explicit { .. } => Err(DynError::MeasureSystemMismatch),
    }
}

/// A cover element as the coordinates it fixes at time zero.
pub(crate) fn cover_constraints(system: &System, region: &Region) -> Result<BTreeMap<i64, u8>> {
    match region {
        Region::Cylinder { start, word } => Ok(word
            .iter()
            .enumerate()
            .map(|(i, &s)| (start + i as i64, s))
            .collect()),
        Region::Ball { center, radius, open } => {
            system.check_point(center)?;
            let r = if *open {
                open_agreement_radius(radius)
            } else {
                closed_agreement_radius(radius)
            };
            let Some(r) = r else {
                return Ok(BTreeMap::new());
            };
            let r = r as i64;
            Ok(match center {
                PointValue::BiSeq(c) => (-r..=r).map(|i| (i, c.at(i))).collect(),
                PointValue::OneSided(c) => (0..=r).map(|i| (i, c.at(i as u64))).collect(),
                _ => return Err(DynError::MixedSystemPoints),
            })
        }
        Region::Interval { .. } => Err(DynError::InvalidParameter("cover elements on a shift are cylinders or balls".into())),
    }
}

fn satisfies(p: &PointValue, constraints: &BTreeMap<i64, u8>, shift: i64) -> bool {
    constraints.iter().all(|(&c, &s)| match p {
        PointValue::BiSeq(q) => q.at(c + shift) == s,
        PointValue::OneSided(q) => c + shift >= 0 && q.at((c + shift) as u64) == s,
        _ => false,
    })
}

/// Checks that every chain of cover elements `U_n ∋ f^n x` over the horizon intersects in
/// measure at most `p_max^T`, the mass of the widest chain of single-symbol cylinders.
/// Cover elements on shifts are clopen, so closures change nothing.
pub fn mu_generator_check(
    system: &System,
    cover: &[Region],
    x: &PointValue,
    measure: &MeasureModel,
    horizon: u64,
    seed: u64,
) -> Result<Verdict> {
    if !matches!(system.kind(), SystemKind::FullShift { .. } | SystemKind::OneSidedShift { .. }) {
        return Err(DynError::CapabilityMissing {
            system: system.id().into(),
            capability: "exact_symbolic",
        });
    }
    if cover.is_empty() || cover.len() > MAX_COVER {
        return Err(DynError::InvalidParameter(format!("cover must have 1..={MAX_COVER} elements")));
    }
    if horizon > MAX_GENERATOR_HORIZON {
        return Err(DynError::InvalidParameter(format!("horizon must be at most {MAX_GENERATOR_HORIZON}")));
    }
    measure.validate()?;
    check_alphabet(system, measure)?;
    if matches!(measure, MeasureModel::Empirical { .. }) {
        return Err(DynError::MeasureSystemMismatch);
    }
    system.check_point(x)?;
    let elements: Vec<BTreeMap<i64, u8>> = cover
        .iter()
        .map(|r| cover_constraints(system, r))
        .collect::<Result<_>>()?;
    let everything = Region::Cylinder { start: 0, word: Vec::new() };
    for (i, y) in system.sample(&everything, COVER_SAMPLES, seed)?.iter().enumerate() {
        if !elements.iter().any(|e| satisfies(y, e, 0)) {
            return Err(DynError::NotACover(format!("sample {i} ({y}) lies in no element")));
        }
    }
    let t = horizon as i64;
    let times: Vec<i64> = if system.capabilities().invertible {
        (-t..=t).collect()
    } else {
        (0..=t).collect()
    };
    let mut admissible: Vec<Vec<usize>> = Vec::with_capacity(times.len());
    for &n in &times {
        let here: Vec<usize> = (0..elements.len()).filter(|&i| satisfies(x, &elements[i], n)).collect();
        if here.is_empty() {
            return Err(DynError::NotACover(format!("no element contains f^{n}(x)")));
        }
        admissible.push(here);
    }
    let chains: usize = admissible.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len())).unwrap_or(usize::MAX);
    if chains > MAX_CHAINS {
        return Err(DynError::BudgetExceeded(format!("{chains} cover chains")));
    }
    let tail = measure.max_symbol_probability().expect("symbolic measure");
    let tail = num_traits::pow(tail, horizon as usize);
    let mut worst = (Rational::zero(), Vec::new());
    let mut choice = vec![0usize; times.len()];
    'chains: loop {
        let mut fixed: BTreeMap<i64, u8> = BTreeMap::new();
        let mut consistent = true;
        for (slot, &n) in times.iter().enumerate() {
            for (&c, &s) in &elements[admissible[slot][choice[slot]]] {
                if *fixed.entry(c + n).or_insert(s) != s {
                    consistent = false;
                }
            }
        }
        if consistent {
            let m = measure.cylinder_measure(&fixed)?;
            if m > worst.0 || worst.1.is_empty() {
                worst = (m, times.iter().enumerate().map(|(s, _)| admissible[s][choice[s]]).collect());
            }
        }
        for slot in (0..times.len()).rev() {
            choice[slot] += 1;
            if choice[slot] < admissible[slot].len() {
                continue 'chains;
            }
            choice[slot] = 0;
        }
        break;
    }
    let (max_measure, chain) = worst;
    let holds = if horizon == 0 {
        max_measure.is_zero()
    } else {
        max_measure <= tail
    };
    let v = if holds {
        Verdict::holds("mu_generator", horizon, seed)
    } else if horizon == 0 {
        Verdict::inconclusive("mu_generator", horizon, seed)
    } else {
        Verdict::fails(
            "mu_generator",
            Witness::CoverChain {
                elements: chain,
                measure: max_measure.clone(),
            },
            horizon,
            seed,
        )
    };
    Ok(v.param("x", x)
        .param("chains", chains)
        .param_q("max_chain_measure", &max_measure)
        .param_q("tail_bound", &tail)
        .param("cover_size", cover.len())
        .param("zero", int(0) == max_measure))
}

/// The cylinder a ball pins down, when it is one.
pub fn ball_cylinder(ball: &DynamicalBall) -> Option<&CylinderSet> {
    match &ball.repr {
        BallRepr::Cylinder { cylinder, .. } => Some(cylinder),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansivity::{gamma_ball, Window};
    use crate::real::{pow2, rat};
    use crate::symbolic::BiSeq;

    fn two_cylinders() -> Vec<Region> {
        vec![Region::cylinder(0, vec![0]), Region::cylinder(0, vec![1])]
    }

    #[test]
    fn markov_validation_and_cylinders() {
        let p = vec![vec![rat(1, 2), rat(1, 2)], vec![rat(1, 4), rat(3, 4)]];
        let pi = vec![rat(1, 3), rat(2, 3)];
        let m = MeasureModel::markov(p.clone(), pi).unwrap();
        assert!(MeasureModel::markov(p, vec![rat(1, 2), rat(1, 2)]).is_err());
        let c: BTreeMap<i64, u8> = [(0, 0), (1, 1)].into_iter().collect();
        assert_eq!(m.cylinder_measure(&c).unwrap(), rat(1, 6));
        // A gap of two steps sums over the free middle symbol.
        let c: BTreeMap<i64, u8> = [(0, 0), (2, 0)].into_iter().collect();
        assert_eq!(m.cylinder_measure(&c).unwrap(), rat(1, 3) * (rat(1, 4) + rat(1, 8)));
    }

    #[test]
    fn uniform_ball_measure() {
        let shift = System::full_shift(2);
        let x = PointValue::BiSeq(BiSeq::periodic(&[0, 1, 1]));
        for t in 0..5u64 {
            let b = gamma_ball(&shift, &x, &rat(1, 2), Window::TwoSided { horizon: t }, 0, 0).unwrap();
            let m = measure_of_ball(&shift, &MeasureModel::uniform(2), &b).unwrap();
            assert_eq!(m, MeasureValue::Exact { value: pow2(-(2 * t as i64 + 1)) });
        }
    }

    #[test]
    fn empirical_ball_measure() {
        let shift = System::full_shift(2);
        let x = PointValue::BiSeq(BiSeq::constant(0));
        let b = gamma_ball(&shift, &x, &rat(1, 2), Window::TwoSided { horizon: 1 }, 0, 0).unwrap();
        let emp = MeasureModel::Empirical {
            region: Region::cylinder(0, vec![]),
            samples: 4000,
            seed: 11,
        };
        match measure_of_ball(&shift, &emp, &b).unwrap() {
            MeasureValue::Estimate { value, half_width, .. } => {
                assert!((value - 0.125).abs() <= half_width + 0.01)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_cover_is_a_generator() {
        let shift = System::full_shift(2);
        let x = PointValue::BiSeq(BiSeq::periodic(&[0, 1]));
        for t in 0..=4 {
            let v = mu_generator_check(&shift, &two_cylinders(), &x, &MeasureModel::uniform(2), t, 0).unwrap();
            if t == 0 {
                assert!(!v.outcome.holds());
            } else {
                assert!(v.outcome.holds(), "t={t}");
            }
        }
    }

    #[test]
    fn coarse_cover_is_not() {
        let shift = System::full_shift(2);
        let x = PointValue::BiSeq(BiSeq::periodic(&[0, 1]));
        let cover = vec![Region::cylinder(0, vec![]), Region::cylinder(0, vec![1])];
        let v = mu_generator_check(&shift, &cover, &x, &MeasureModel::uniform(2), 3, 0).unwrap();
        assert!(v.outcome.fails());
        let bad = vec![Region::cylinder(0, vec![1])];
        assert!(matches!(
            mu_generator_check(&shift, &bad, &x, &MeasureModel::uniform(2), 1, 0),
            Err(DynError::NotACover(_))
        ));
        assert!(matches!(
            mu_generator_check(&shift, &two_cylinders(), &x, &MeasureModel::uniform(3), 1, 0),
            Err(DynError::MeasureSystemMismatch)
        ));
    }
}
