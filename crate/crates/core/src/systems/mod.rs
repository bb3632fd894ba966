//! The system zoo: symbolic shifts, exact interval maps, the tanh ladder and
//! satellite extensions of a base system.

pub mod config;
pub mod ladder;
pub mod piecewise;
pub mod region;
pub mod satellite;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DynError, Result};
use crate::interval::{Interval, IntervalSet};
use crate::point::{LadderPoint, PointValue, SatellitePoint, Scalar};
use crate::real::{from_f64, int, rat, to_f64, Rational, Real};
use crate::symbolic::{closed_agreement_radius, open_agreement_radius, BiSeq, OneSidedSeq};

pub use config::SystemDescriptor;
pub use piecewise::{Approx, Law, Piece};
pub use region::Region;
pub use satellite::SatelliteExtension;

/// Default right end of the sampling window of `f(x) = 2x` on `[0, inf)`.
pub const DEFAULT_LINE_WINDOW: i64 = 1 << 20;
/// Free coordinates drawn on each side of a constrained window when sampling sequences.
const SAMPLE_MARGIN: i64 = 16;
/// Largest number of points `periodic_points` will enumerate.
const PERIODIC_LIMIT: usize = 1 << 20;
/// Satellite levels `k` listed by `periodic_points` and used for candidate generation.
const SATELLITE_LEVELS: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub invertible: bool,
    pub exact_symbolic: bool,
    pub exact_interval_image: bool,
    pub enumerates_periodic: bool,
    pub compact: bool,
}

/// Monotone drift of an increasing interval map relative to the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drift {
    /// `f(x) >= x` everywhere.
    Up,
    /// `f(x) <= x` everywhere.
    Down,
}

#[derive(Clone, Debug)]
pub enum SystemKind {
    /// Two-sided full shift on `alphabet` symbols.
    FullShift { alphabet: u8 },
    /// One-sided full shift on `alphabet` symbols.
    OneSidedShift { alphabet: u8 },
    /// `f(x) = 2x` on `[0, inf)`; samples are drawn from `[0, window]`.
    DoublingLine { window: Rational },
    /// `f(x) = x^2` on `[0, 1]`.
    Squaring,
    /// Full tent map on `[0, 1]`.
    Tent,
    /// `f(x) = 2x mod 1` on the circle `[0, 1)`.
    DoublingCircle,
    /// Identity on `[0, 1]`.
    Identity,
    /// Identity on the tanh ladder, with (`X`) or without (`Y`) its two limit points.
    Ladder { with_limits: bool },
    Satellite(Box<SatelliteExtension>),
}

#[derive(Clone, Debug)]
pub struct System {
    kind: SystemKind,
}

/// Result of `periodic_points`. `complete` is false when the set is infinite or was truncated.
#[derive(Clone, Debug)]
pub struct PeriodicPoints {
    pub points: Vec<PointValue>,
    pub complete: bool,
}

impl System {
    pub fn full_shift(alphabet: u8) -> Self {
        assert!(alphabet >= 2, "alphabet needs at least two symbols");
        System {
            kind: SystemKind::FullShift { alphabet },
        }
    }

    pub fn one_sided_shift(alphabet: u8) -> Self {
        assert!(alphabet >= 2, "alphabet needs at least two symbols");
        System {
            kind: SystemKind::OneSidedShift { alphabet },
        }
    }

    pub fn doubling_line() -> Self {
        Self::doubling_line_with_window(int(DEFAULT_LINE_WINDOW))
    }

    pub fn doubling_line_with_window(window: Rational) -> Self {
        System {
            kind: SystemKind::DoublingLine { window },
        }
    }

    pub fn squaring() -> Self {
        System {
            kind: SystemKind::Squaring,
        }
    }

    pub fn tent() -> Self {
        System { kind: SystemKind::Tent }
    }

    pub fn doubling_circle() -> Self {
        System {
            kind: SystemKind::DoublingCircle,
        }
    }

    pub fn identity() -> Self {
        System {
            kind: SystemKind::Identity,
        }
    }

    /// `with_limits = true` gives the compact ladder `X`, `false` the ladder `Y = X \ {a, b}`.
    pub fn tanh_ladder(with_limits: bool) -> Self {
        System {
            kind: SystemKind::Ladder { with_limits },
        }
    }

    /// Attaches satellite orbits to the periodic point `anchor` of prime period `period`.
    pub fn satellite_extension(base: System, anchor: PointValue, period: u32) -> Result<Self> {
        let caps = base.capabilities();
        if !caps.exact_symbolic || !caps.compact {
            return Err(DynError::CapabilityMissing {
                system: base.id().into(),
                capability: "exact_symbolic",
            });
        }
        if period == 0 {
            return Err(DynError::InvalidParameter("period must be positive".into()));
        }
        base.check_point(&anchor)?;
        if base.iterate(&anchor, period as i64)? != anchor {
            return Err(DynError::NotPeriodic);
        }
        let mut orbit = vec![anchor.clone()];
        for s in 1..period {
            let next = base.iterate(&orbit[s as usize - 1], 1)?;
            if next == anchor {
                return Err(DynError::PeriodNotPrime { period, divisor: s });
            }
            orbit.push(next);
        }
        Ok(System {
            kind: SystemKind::Satellite(Box::new(SatelliteExtension {
                base,
                anchor,
                period,
                anchor_orbit: orbit,
            })),
        })
    }

    /// Satellites over the full 2-shift anchored at the period-2 point `...0101...`.
    pub fn default_satellite_extension() -> Self {
        Self::satellite_extension(
            System::full_shift(2),
            PointValue::BiSeq(BiSeq::periodic(&[0, 1])),
            2,
        )
        .expect("01 has prime period 2")
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn id(&self) -> &'static str {
        match &self.kind {
            SystemKind::FullShift { .. } => "full_shift",
            SystemKind::OneSidedShift { .. } => "one_sided_shift",
            SystemKind::DoublingLine { .. } => "doubling_line",
            SystemKind::Squaring => "squaring",
            SystemKind::Tent => "tent",
            SystemKind::DoublingCircle => "doubling_circle",
            SystemKind::Identity => "identity",
            SystemKind::Ladder { .. } => "tanh_ladder",
            SystemKind::Satellite(_) => "satellite_extension",
        }
    }

    pub fn capabilities(&self) -> Capabilities {
        let c = |invertible, exact_symbolic, exact_interval_image, enumerates_periodic, compact| Capabilities {
            invertible,
            exact_symbolic,
            exact_interval_image,
            enumerates_periodic,
            compact,
        };
        match &self.kind {
            SystemKind::FullShift { .. } => c(true, true, false, true, true),
            SystemKind::OneSidedShift { .. } => c(false, true, false, true, true),
            SystemKind::DoublingLine { .. } => c(true, false, true, true, false),
            SystemKind::Squaring => c(false, false, true, true, true),
            SystemKind::Tent => c(false, false, true, true, true),
            SystemKind::DoublingCircle => c(false, false, true, true, true),
            SystemKind::Identity => c(true, false, true, false, true),
            SystemKind::Ladder { with_limits } => c(true, false, false, true, *with_limits),
            SystemKind::Satellite(s) => {
                let b = s.base.capabilities();
                c(b.invertible, true, false, true, true)
            }
        }
    }

    pub fn satellite(&self) -> Option<&SatelliteExtension> {
        match &self.kind {
            SystemKind::Satellite(s) => Some(s),
            _ => None,
        }
    }

    pub fn alphabet(&self) -> Option<u8> {
        match &self.kind {
            SystemKind::FullShift { alphabet } | SystemKind::OneSidedShift { alphabet } => Some(*alphabet),
            _ => None,
        }
    }

    /// Whether the point has the representation this system works with.
    fn variant_ok(&self, p: &PointValue) -> bool {
        matches!(
            (&self.kind, p),
            (SystemKind::FullShift { .. }, PointValue::BiSeq(_))
                | (SystemKind::OneSidedShift { .. }, PointValue::OneSided(_))
                | (SystemKind::DoublingLine { .. }, PointValue::Scalar(_))
                | (SystemKind::Squaring, PointValue::Scalar(_))
                | (SystemKind::Tent, PointValue::Scalar(_))
                | (SystemKind::DoublingCircle, PointValue::Scalar(_))
                | (SystemKind::Identity, PointValue::Scalar(_))
                | (SystemKind::Ladder { .. }, PointValue::Ladder(_))
                | (SystemKind::Satellite(_), PointValue::Satellite(_))
        )
    }

    /// Scalar domain as `(lo, hi, hi_closed)`; `hi = None` for unbounded.
    fn scalar_domain(&self) -> Option<(Rational, Option<Rational>, bool)> {
        match &self.kind {
            SystemKind::DoublingLine { .. } => Some((Rational::zero(), None, false)),
            SystemKind::Squaring | SystemKind::Tent | SystemKind::Identity => {
                Some((Rational::zero(), Some(Rational::one()), true))
            }
            SystemKind::DoublingCircle => Some((Rational::zero(), Some(Rational::one()), false)),
            _ => None,
        }
    }

    /// The domain as an interval, with the unbounded line cut at its sampling window.
    pub fn domain_interval(&self) -> Option<Interval> {
        let (lo, hi, hi_closed) = self.scalar_domain()?;
        let hi = match (&self.kind, hi) {
            (SystemKind::DoublingLine { window }, _) => window.clone(),
            (_, Some(h)) => h,
            _ => unreachable!(),
        };
        let closed = hi_closed || matches!(self.kind, SystemKind::DoublingLine { .. });
        Interval::new(lo, hi, true, closed)
    }

    fn scalar_in_domain(&self, s: &Scalar) -> bool {
        let Some((lo, hi, hi_closed)) = self.scalar_domain() else {
            return false;
        };
        match s {
            Scalar::Exact(q) => {
                *q >= lo
                    && match &hi {
                        None => true,
                        Some(h) => {
                            if hi_closed {
                                q <= h
                            } else {
                                q < h
                            }
                        }
                    }
            }
            Scalar::Float(x) => {
                let upper = match (&self.kind, &hi) {
                    (SystemKind::DoublingLine { window }, _) => Some(to_f64(window)),
                    (_, Some(h)) => Some(to_f64(h)),
                    _ => None,
                };
                x.is_finite()
                    && *x >= to_f64(&lo)
                    && match upper {
                        None => true,
                        Some(h) => {
                            if hi_closed || matches!(self.kind, SystemKind::DoublingLine { .. }) {
                                *x <= h
                            } else {
                                *x < h
                            }
                        }
                    }
            }
        }
    }

    pub fn check_point(&self, p: &PointValue) -> Result<()> {
        if !self.variant_ok(p) {
            return Err(DynError::DomainViolation(format!(
                "`{p}` is not a point of {}",
                self.id()
            )));
        }
        let ok = match (&self.kind, p) {
            (SystemKind::FullShift { alphabet }, PointValue::BiSeq(s)) => s.max_symbol() < *alphabet,
            (SystemKind::OneSidedShift { alphabet }, PointValue::OneSided(s)) => s.max_symbol() < *alphabet,
            (SystemKind::Ladder { with_limits }, PointValue::Ladder(l)) => {
                ladder::in_range(*l) && (*with_limits || matches!(l, LadderPoint::Rung(_)))
            }
            (SystemKind::Satellite(s), PointValue::Satellite(sp)) => return s.check(sp),
            (_, PointValue::Scalar(s)) => self.scalar_in_domain(s),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(DynError::DomainViolation(format!(
                "`{p}` lies outside the domain of {}",
                self.id()
            )))
        }
    }

    pub fn contains(&self, p: &PointValue) -> bool {
        self.check_point(p).is_ok()
    }

    fn pieces_of(&self) -> Option<Vec<Piece>> {
        let affine = |lo: Rational, hi: Option<Rational>, hi_closed: bool, slope: i64, intercept: i64| Piece {
            lo,
            hi,
            lo_closed: true,
            hi_closed,
            law: Law::Affine {
                slope: int(slope),
                intercept: int(intercept),
            },
        };
        Some(match &self.kind {
            SystemKind::DoublingLine { .. } => vec![affine(int(0), None, false, 2, 0)],
            SystemKind::Squaring => vec![Piece {
                lo: int(0),
                hi: Some(int(1)),
                lo_closed: true,
                hi_closed: true,
                law: Law::Square,
            }],
            SystemKind::Tent => vec![
                affine(int(0), Some(rat(1, 2)), true, 2, 0),
                Piece {
                    lo_closed: false,
                    ..affine(rat(1, 2), Some(int(1)), true, -2, 2)
                },
            ],
            SystemKind::DoublingCircle => vec![
                affine(int(0), Some(rat(1, 2)), false, 2, 0),
                affine(rat(1, 2), Some(int(1)), false, 2, -1),
            ],
            SystemKind::Identity => vec![affine(int(0), Some(int(1)), true, 1, 0)],
            _ => return None,
        })
    }

    /// Monotone pieces of an interval map.
    pub fn pieces(&self) -> Result<Vec<Piece>> {
        self.pieces_of().ok_or_else(|| self.missing("exact_interval_image"))
    }

    /// For increasing maps that never cross the diagonal.
    pub fn drift(&self) -> Option<Drift> {
        match self.kind {
            SystemKind::DoublingLine { .. } => Some(Drift::Up),
            SystemKind::Squaring => Some(Drift::Down),
            _ => None,
        }
    }

    fn missing(&self, capability: &'static str) -> DynError {
        DynError::CapabilityMissing {
            system: self.id().into(),
            capability,
        }
    }

    fn step_scalar(&self, s: &Scalar, forward: bool) -> Result<Scalar> {
        Ok(match s {
            Scalar::Exact(q) => Scalar::Exact(match (&self.kind, forward) {
                (SystemKind::DoublingLine { .. }, true) => q * int(2),
                (SystemKind::DoublingLine { .. }, false) => q / int(2),
                (SystemKind::Squaring, _) => q * q,
                (SystemKind::Tent, _) => {
                    if *q <= rat(1, 2) {
                        q * int(2)
                    } else {
                        int(2) - q * int(2)
                    }
                }
                (SystemKind::DoublingCircle, _) => {
                    let y = q * int(2);
                    let fl = y.floor();
                    y - fl
                }
                (SystemKind::Identity, _) => q.clone(),
                _ => unreachable!("scalar systems only"),
            }),
            Scalar::Float(x) => Scalar::Float(match (&self.kind, forward) {
                (SystemKind::DoublingLine { .. }, true) => 2.0 * x,
                (SystemKind::DoublingLine { .. }, false) => x / 2.0,
                (SystemKind::Squaring, _) => x * x,
                (SystemKind::Tent, _) => {
                    if *x <= 0.5 {
                        2.0 * x
                    } else {
                        2.0 - 2.0 * x
                    }
                }
                (SystemKind::DoublingCircle, _) => (2.0 * x).rem_euclid(1.0),
                (SystemKind::Identity, _) => *x,
                _ => unreachable!("scalar systems only"),
            }),
        })
    }

    /// `f^n(p)`. Negative `n` needs an invertible system.
    pub fn iterate(&self, p: &PointValue, n: i64) -> Result<PointValue> {
        self.check_point(p)?;
        if n < 0 && !self.capabilities().invertible {
            return Err(DynError::NegativeIterateOnNonInvertible);
        }
        match (&self.kind, p) {
            (SystemKind::FullShift { .. }, PointValue::BiSeq(s)) => Ok(PointValue::BiSeq(s.shift(n))),
            (SystemKind::OneSidedShift { .. }, PointValue::OneSided(s)) => {
                Ok(PointValue::OneSided(s.shift(n as u64)))
            }
            (SystemKind::Ladder { .. }, _) | (SystemKind::Identity, _) => Ok(p.clone()),
            (SystemKind::Satellite(s), PointValue::Satellite(sp)) => {
                Ok(PointValue::Satellite(s.iterate(sp, n)?))
            }
            (SystemKind::DoublingLine { .. }, PointValue::Scalar(Scalar::Exact(q))) => {
                Ok(PointValue::exact(q * crate::real::pow2(n)))
            }
            (_, PointValue::Scalar(s)) => {
                let mut cur = s.clone();
                for _ in 0..n.unsigned_abs() {
                    cur = self.step_scalar(&cur, n > 0)?;
                }
                let out = PointValue::Scalar(cur);
                self.check_point(&out)?;
                Ok(out)
            }
            _ => unreachable!("variant checked"),
        }
    }

    pub fn step(&self, p: &PointValue) -> Result<PointValue> {
        self.iterate(p, 1)
    }

    /// `p, f(p), ..., f^n(p)`.
    pub fn orbit(&self, p: &PointValue, n: usize) -> Result<Vec<PointValue>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(p.clone());
        self.check_point(p)?;
        for _ in 0..n {
            let next = self.iterate(out.last().unwrap(), 1)?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn distance(&self, p: &PointValue, q: &PointValue) -> Result<Real> {
        if !self.variant_ok(p) || !self.variant_ok(q) {
            return Err(DynError::MixedSystemPoints);
        }
        Ok(match (&self.kind, p, q) {
            (_, PointValue::BiSeq(a), PointValue::BiSeq(b)) => Real::Exact(a.distance(b)),
            (_, PointValue::OneSided(a), PointValue::OneSided(b)) => Real::Exact(a.distance(b)),
            (_, PointValue::Ladder(a), PointValue::Ladder(b)) => Real::Approx(ladder::distance(*a, *b)),
            (SystemKind::Satellite(s), PointValue::Satellite(a), PointValue::Satellite(b)) => s.distance(a, b)?,
            (kind, PointValue::Scalar(a), PointValue::Scalar(b)) => {
                let circle = matches!(kind, SystemKind::DoublingCircle);
                match (a, b) {
                    (Scalar::Exact(x), Scalar::Exact(y)) => {
                        let d = (x - y).abs();
                        Real::Exact(if circle { d.clone().min(int(1) - d) } else { d })
                    }
                    _ => {
                        let d = (a.to_f64() - b.to_f64()).abs();
                        Real::Approx(if circle { d.min(1.0 - d) } else { d })
                    }
                }
            }
            _ => unreachable!("variant checked"),
        })
    }

    /// Upper bound on distances between points (the sampling window for the line).
    pub fn diameter(&self) -> Real {
        Real::Exact(match &self.kind {
            SystemKind::DoublingLine { window } => window.clone(),
            SystemKind::DoublingCircle => rat(1, 2),
            SystemKind::Ladder { .. } => int(2),
            SystemKind::Satellite(_) => int(3),
            _ => int(1),
        })
    }

    /// A region covering the whole space (the sampling window for the line).
    pub fn whole_region(&self) -> Region {
        match &self.kind {
            SystemKind::FullShift { .. } | SystemKind::OneSidedShift { .. } => Region::cylinder(0, Vec::new()),
            SystemKind::Ladder { .. } => Region::Ball {
                center: PointValue::Ladder(LadderPoint::Rung(0)),
                radius: int(3),
                open: false,
            },
            SystemKind::Satellite(s) => Region::Ball {
                center: PointValue::base_point(s.anchor.clone()),
                radius: int(3),
                open: false,
            },
            _ => Region::interval(self.domain_interval().expect("scalar systems have domains")),
        }
    }

    /// Exact `f^n(R)` for an interval region.
    pub fn interval_image(&self, region: &Region, n: u32) -> Result<IntervalSet> {
        let pieces = self.pieces()?;
        let set = self.region_to_intervals(region)?;
        Ok((0..n).fold(set, |s, _| piecewise::image(&pieces, &s)))
    }

    /// A region of a scalar system as an exact interval set intersected with the domain.
    pub fn region_to_intervals(&self, region: &Region) -> Result<IntervalSet> {
        let (lo, hi, hi_closed) = self.scalar_domain().ok_or_else(|| self.missing("exact_interval_image"))?;
        let dom_hi = hi.unwrap_or_else(|| self.region_bound(region) + int(1));
        let dom = Interval::new(lo, dom_hi, true, hi_closed || self.scalar_domain_unbounded())
            .expect("domains are non-empty");
        let raw = match region {
            Region::Interval { interval } => IntervalSet::single(interval.clone()),
            Region::Ball { center, radius, open } => {
                let c = match center {
                    PointValue::Scalar(Scalar::Exact(q)) => q.clone(),
                    PointValue::Scalar(Scalar::Float(x)) => from_f64(*x)?,
                    _ => return Err(DynError::MixedSystemPoints),
                };
                let iv = Interval::new(&c - radius, &c + radius, !open, !open)
                    .ok_or(DynError::EmptyRegion)?;
                if matches!(self.kind, SystemKind::DoublingCircle) {
                    if *radius >= rat(1, 2) {
                        IntervalSet::single(dom.clone())
                    } else {
                        // Wrap the parts hanging over either end back onto [0, 1).
                        let shifted = |delta: i64| Interval {
                            lo: &iv.lo + int(delta),
                            hi: &iv.hi + int(delta),
                            ..iv.clone()
                        };
                        IntervalSet::from_parts([iv.clone(), shifted(1), shifted(-1)])
                    }
                } else {
                    IntervalSet::single(iv)
                }
            }
            Region::Cylinder { .. } => {
                return Err(DynError::InvalidParameter(
                    "cylinder regions need a symbolic system".into(),
                ))
            }
        };
        Ok(raw.intersect_interval(&dom))
    }

    fn scalar_domain_unbounded(&self) -> bool {
        matches!(self.kind, SystemKind::DoublingLine { .. })
    }

    fn region_bound(&self, region: &Region) -> Rational {
        match region {
            Region::Interval { interval } => interval.hi.clone().abs(),
            Region::Ball { center, radius, .. } => {
                let c = match center {
                    PointValue::Scalar(Scalar::Exact(q)) => q.clone(),
                    PointValue::Scalar(Scalar::Float(x)) => from_f64(*x).unwrap_or_else(|_| int(0)),
                    _ => int(0),
                };
                c.abs() + radius
            }
            Region::Cylinder { .. } => int(0),
        }
    }

    pub fn region_contains(&self, region: &Region, p: &PointValue) -> Result<bool> {
        self.check_point(p)?;
        match region {
            Region::Ball { center, radius, open } => {
                let d = self.distance(center, p)?;
                let r = Real::Exact(radius.clone());
                Ok(if *open { d.lt(&r) } else { d.le(&r) })
            }
            Region::Interval { interval } => match p {
                PointValue::Scalar(Scalar::Exact(q)) => Ok(interval.contains(q)),
                PointValue::Scalar(Scalar::Float(x)) => {
                    let (lo, hi) = (to_f64(&interval.lo), to_f64(&interval.hi));
                    let above = if interval.lo_closed { *x >= lo } else { *x > lo };
                    let below = if interval.hi_closed { *x <= hi } else { *x < hi };
                    Ok(above && below)
                }
                PointValue::Ladder(l) => Ok(interval.contains(&from_f64(ladder::value(*l))?)),
                _ => Err(DynError::MixedSystemPoints),
            },
            Region::Cylinder { start, word } => match p {
                PointValue::BiSeq(s) => Ok(s.window(*start, *start + word.len() as i64 - 1) == *word),
                PointValue::OneSided(s) => {
                    if *start < 0 {
                        return Err(DynError::DomainViolation("one-sided cylinder at a negative coordinate".into()));
                    }
                    let lo = *start as u64;
                    Ok(word.is_empty() || s.window(lo, lo + word.len() as u64 - 1) == *word)
                }
                _ => Err(DynError::MixedSystemPoints),
            },
        }
    }

    /// Points with `f^period(p) = p`.
    pub fn periodic_points(&self, period: u32) -> Result<PeriodicPoints> {
        if period == 0 {
            return Err(DynError::InvalidParameter("period must be positive".into()));
        }
        match &self.kind {
            SystemKind::FullShift { alphabet } | SystemKind::OneSidedShift { alphabet } => {
                let words = words(*alphabet, period as usize)?;
                let two_sided = matches!(self.kind, SystemKind::FullShift { .. });
                Ok(PeriodicPoints {
                    points: words
                        .into_iter()
                        .map(|w| {
                            if two_sided {
                                PointValue::BiSeq(BiSeq::periodic(&w))
                            } else {
                                PointValue::OneSided(OneSidedSeq::periodic(&w))
                            }
                        })
                        .collect(),
                    complete: true,
                })
            }
            SystemKind::Squaring => Ok(PeriodicPoints {
                points: vec![PointValue::exact(int(0)), PointValue::exact(int(1))],
                complete: true,
            }),
            SystemKind::DoublingLine { .. } => Ok(PeriodicPoints {
                points: vec![PointValue::exact(int(0))],
                complete: true,
            }),
            SystemKind::Tent | SystemKind::DoublingCircle => {
                if period > 16 {
                    return Err(DynError::BudgetExceeded(format!("period {period} exceeds 16")));
                }
                let pieces = self.pieces()?;
                let mut pts: Vec<Rational> = affine_laps(&pieces, period)
                    .into_iter()
                    .filter_map(|(dom, slope, intercept)| {
                        let one = Rational::one();
                        if slope == one {
                            return None;
                        }
                        let x = intercept / (one - slope);
                        dom.contains(&x).then_some(x)
                    })
                    .collect();
                pts.sort();
                pts.dedup();
                Ok(PeriodicPoints {
                    points: pts.into_iter().map(PointValue::exact).collect(),
                    complete: true,
                })
            }
            SystemKind::Identity => Err(self.missing("enumerates_periodic")),
            SystemKind::Ladder { with_limits } => Ok(PeriodicPoints {
                points: ladder::all_points(*with_limits)
                    .into_iter()
                    .map(PointValue::Ladder)
                    .collect(),
                complete: false,
            }),
            SystemKind::Satellite(s) => {
                let base = s.base.periodic_points(period)?;
                let mut points: Vec<PointValue> = base.points.into_iter().map(PointValue::base_point).collect();
                let rotates = period % s.period == 0;
                if rotates {
                    for level in 1..=SATELLITE_LEVELS {
                        for copy in 1..=3 {
                            for phase in 0..s.period {
                                points.push(PointValue::orbit_point(copy, level, phase));
                            }
                        }
                    }
                }
                Ok(PeriodicPoints {
                    points,
                    complete: base.complete && !rotates,
                })
            }
        }
    }

    /// `count` seeded points of `region`.
    pub fn sample(&self, region: &Region, count: usize, seed: u64) -> Result<Vec<PointValue>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match &self.kind {
            SystemKind::FullShift { alphabet } => {
                let constraint = self.symbolic_constraint(region)?;
                Ok((0..count)
                    .map(|_| PointValue::BiSeq(random_biseq(&mut rng, *alphabet, &constraint)))
                    .collect())
            }
            SystemKind::OneSidedShift { alphabet } => {
                let (start, word) = self.symbolic_constraint(region)?;
                if start < 0 {
                    return Err(DynError::EmptyRegion);
                }
                Ok((0..count)
                    .map(|_| PointValue::OneSided(random_one_sided(&mut rng, *alphabet, start as usize, &word)))
                    .collect())
            }
            SystemKind::Ladder { .. } => {
                let pool: Vec<PointValue> = self
                    .ladder_points()
                    .into_iter()
                    .filter(|p| self.region_contains(region, p).unwrap_or(false))
                    .collect();
                if pool.is_empty() {
                    return Err(DynError::EmptyRegion);
                }
                Ok((0..count).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect())
            }
            SystemKind::Satellite(s) => self.sample_satellite(s, region, count, &mut rng),
            _ => {
                let set = self.region_to_intervals(region)?;
                let set = match self.domain_interval() {
                    Some(dom) => set.intersect_interval(&dom),
                    None => set,
                };
                if set.is_empty() {
                    return Err(DynError::EmptyRegion);
                }
                let widths: Vec<Rational> = set.parts().iter().map(Interval::width).collect();
                let total: Rational = widths.iter().cloned().fold(Rational::zero(), |a, b| a + b);
                let mut out = Vec::with_capacity(count);
                for _ in 0..count {
                    let q = if total.is_zero() {
                        set.parts()[0].lo.clone()
                    } else {
                        // Uniform position along the concatenated parts, strictly inside one.
                        let k: i64 = rng.gen_range(1..(1i64 << 32));
                        let mut pos = &total * rat(k, 1i64 << 32);
                        let mut chosen = set.parts()[0].midpoint();
                        for (part, w) in set.parts().iter().zip(&widths) {
                            if pos < *w || (pos == *w && part.hi_closed) {
                                chosen = &part.lo + &pos;
                                break;
                            }
                            pos -= w;
                        }
                        chosen
                    };
                    out.push(PointValue::exact(q));
                }
                Ok(out)
            }
        }
    }

    fn ladder_points(&self) -> Vec<PointValue> {
        match self.kind {
            SystemKind::Ladder { with_limits } => ladder::all_points(with_limits)
                .into_iter()
                .map(PointValue::Ladder)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Symbolic region as a single fixed window `(start, word)`.
    fn symbolic_constraint(&self, region: &Region) -> Result<(i64, Vec<u8>)> {
        match region {
            Region::Cylinder { start, word } => {
                if let Some(a) = self.alphabet() {
                    if word.iter().any(|&s| s >= a) {
                        return Err(DynError::EmptyRegion);
                    }
                }
                Ok((*start, word.clone()))
            }
            Region::Ball { center, radius, open } => {
                let r = if *open {
                    open_agreement_radius(radius)
                } else {
                    closed_agreement_radius(radius)
                };
                if !radius.is_positive() && *open {
                    return Err(DynError::EmptyRegion);
                }
                match (center, r) {
                    (_, None) => Ok((0, Vec::new())),
                    (PointValue::BiSeq(c), Some(r)) => {
                        let r = r as i64;
                        Ok((-r, c.window(-r, r)))
                    }
                    (PointValue::OneSided(c), Some(r)) => Ok((0, c.window(0, r))),
                    _ => Err(DynError::MixedSystemPoints),
                }
            }
            Region::Interval { .. } => Err(DynError::InvalidParameter(
                "interval regions need a scalar system".into(),
            )),
        }
    }

    fn sample_satellite(
        &self,
        s: &SatelliteExtension,
        region: &Region,
        count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<PointValue>> {
        let Region::Ball { center, radius, open } = region else {
            return Err(DynError::InvalidParameter("satellite regions are balls".into()));
        };
        let inside = |d: &Real| {
            let r = Real::Exact(radius.clone());
            if *open {
                d.lt(&r)
            } else {
                d.le(&r)
            }
        };
        let mut orbit_pool = Vec::new();
        for level in 1..=SATELLITE_LEVELS {
            for copy in 1..=3 {
                for phase in 0..s.period {
                    let q = PointValue::orbit_point(copy, level, phase);
                    if inside(&self.distance(center, &q)?) {
                        orbit_pool.push(q);
                    }
                }
            }
        }
        // Base points near the base projection of the center.
        let (base_center, slack) = match center {
            PointValue::Satellite(SatellitePoint::Base(b)) => ((**b).clone(), Rational::zero()),
            PointValue::Satellite(SatellitePoint::Orbit { level, phase, .. }) => {
                (s.phase_point(*phase).clone(), rat(1, *level as i64))
            }
            _ => return Err(DynError::MixedSystemPoints),
        };
        let base_radius = radius - slack;
        let base_region = Region::Ball {
            center: base_center,
            radius: base_radius.clone(),
            open: *open,
        };
        let base_ok = base_radius.is_positive() || (!*open && base_radius.is_zero());
        if orbit_pool.is_empty() && !base_ok {
            return Err(DynError::EmptyRegion);
        }
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let use_orbit = !orbit_pool.is_empty() && (!base_ok || i % 2 == 0);
            if use_orbit {
                out.push(orbit_pool[rng.gen_range(0..orbit_pool.len())].clone());
            } else {
                let p = s.base.sample(&base_region, 1, rng.gen())?.remove(0);
                out.push(PointValue::base_point(p));
            }
        }
        Ok(out)
    }

    /// Structured description of the system.
    pub fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor::of(self)
    }
}

/// All words of the given length, lexicographically.
pub fn words(alphabet: u8, len: usize) -> Result<Vec<Vec<u8>>> {
    let total = (alphabet as u128).checked_pow(len as u32).filter(|&t| t <= PERIODIC_LIMIT as u128);
    let Some(total) = total else {
        return Err(DynError::BudgetExceeded(format!("{alphabet}^{len} words")));
    };
    let mut out = Vec::with_capacity(total as usize);
    let mut w = vec![0u8; len];
    for _ in 0..total {
        out.push(w.clone());
        for i in (0..len).rev() {
            w[i] += 1;
            if w[i] < alphabet {
                break;
            }
            w[i] = 0;
        }
    }
    Ok(out)
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: u8, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.gen_range(0..alphabet)).collect()
}

fn random_biseq(rng: &mut ChaCha8Rng, alphabet: u8, (start, word): &(i64, Vec<u8>)) -> BiSeq {
    let lo = start.min(&0) - SAMPLE_MARGIN;
    let hi = (start + word.len() as i64).max(1) + SAMPLE_MARGIN;
    let mut core = random_word(rng, alphabet, (hi - lo) as usize);
    let at = (start - lo) as usize;
    core[at..at + word.len()].copy_from_slice(word);
    let lp = rng.gen_range(1..=4);
    let rp = rng.gen_range(1..=4);
    let left = random_word(rng, alphabet, lp);
    let right = random_word(rng, alphabet, rp);
    BiSeq::new(left, core, right, lo).expect("non-empty periods")
}

fn random_one_sided(rng: &mut ChaCha8Rng, alphabet: u8, start: usize, word: &[u8]) -> OneSidedSeq {
    let len = start + word.len() + SAMPLE_MARGIN as usize;
    let mut core = random_word(rng, alphabet, len);
    core[start..start + word.len()].copy_from_slice(word);
    let tp = rng.gen_range(1..=4);
    let tail = random_word(rng, alphabet, tp);
    OneSidedSeq::new(core, tail).expect("non-empty tail")
}

/// Laps of `f^n` for piecewise-affine maps: `(domain, slope, intercept)`.
fn affine_laps(pieces: &[Piece], n: u32) -> Vec<(Interval, Rational, Rational)> {
    let domain = |p: &Piece| {
        Interval::new(
            p.lo.clone(),
            p.hi.clone().expect("bounded pieces"),
            p.lo_closed,
            p.hi_closed,
        )
    };
    let coeffs = |p: &Piece| match &p.law {
        Law::Affine { slope, intercept } => (slope.clone(), intercept.clone()),
        Law::Square => unreachable!("affine maps only"),
    };
    let mut laps: Vec<(Interval, Rational, Rational)> = pieces
        .iter()
        .filter_map(|p| {
            let (s, c) = coeffs(p);
            domain(p).map(|d| (d, s, c))
        })
        .collect();
    for _ in 1..n {
        let mut next = Vec::with_capacity(laps.len() * pieces.len());
        for (dom, a, b) in &laps {
            for p in pieces {
                let Some(target) = domain(p) else { continue };
                // {x in dom : a x + b in target}
                let (lo, hi) = ((&target.lo - b) / a, (&target.hi - b) / a);
                let pre = if a.is_positive() {
                    Interval::new(lo, hi, target.lo_closed, target.hi_closed)
                } else {
                    Interval::new(hi, lo, target.hi_closed, target.lo_closed)
                };
                let Some(j) = pre.and_then(|pre| pre.intersect(dom)) else { continue };
                let (s, c) = coeffs(p);
                next.push((j, &s * a, &s * b + c));
            }
        }
        laps = next;
    }
    laps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> PointValue {
        s.parse().unwrap()
    }

    #[test]
    fn iterates_of_spec_examples() {
        let shift = System::full_shift(2);
        let zero = PointValue::BiSeq(BiSeq::constant(0));
        assert_eq!(shift.iterate(&zero, 5).unwrap(), zero);
        assert_eq!(System::squaring().iterate(&q("1/2"), 2).unwrap(), q("1/16"));
        assert_eq!(System::doubling_line().iterate(&q("3"), 4).unwrap(), q("48"));
        assert_eq!(System::doubling_line().iterate(&q("3"), -1).unwrap(), q("3/2"));
    }

    #[test]
    fn iterate_errors() {
        assert!(matches!(
            System::squaring().iterate(&q("1/2"), -1),
            Err(DynError::NegativeIterateOnNonInvertible)
        ));
        assert!(matches!(
            System::squaring().iterate(&q("3/2"), 1),
            Err(DynError::DomainViolation(_))
        ));
        assert!(matches!(
            System::squaring().distance(&q("1/2"), &q("(0)(0)@0")),
            Err(DynError::MixedSystemPoints)
        ));
    }

    #[test]
    fn shift_distance_at_coordinate_zero() {
        let shift = System::full_shift(2);
        let x = PointValue::BiSeq(BiSeq::from_window(0, &[1], 0));
        let y = PointValue::BiSeq(BiSeq::constant(0));
        assert_eq!(shift.distance(&x, &y).unwrap(), Real::Exact(int(1)));
        assert!(shift.distance(&x, &x).unwrap().is_zero());
    }

    #[test]
    fn satellite_metric_and_rotation() {
        let sys = System::default_satellite_extension();
        let a = PointValue::orbit_point(1, 5, 1);
        let b = PointValue::orbit_point(2, 5, 1);
        assert_eq!(sys.distance(&a, &b).unwrap(), Real::Exact(rat(1, 5)));
        assert_eq!(sys.iterate(&PointValue::orbit_point(2, 5, 1), 1).unwrap(), PointValue::orbit_point(2, 5, 0));
        let y = PointValue::base_point(PointValue::BiSeq(BiSeq::constant(0)));
        let p1 = PointValue::BiSeq(BiSeq::periodic(&[1, 0]));
        let d0 = System::full_shift(2).distance(&p1, &PointValue::BiSeq(BiSeq::constant(0))).unwrap();
        assert_eq!(sys.distance(&a, &y).unwrap(), Real::Exact(rat(1, 5)).add(&d0));
    }

    #[test]
    fn satellite_construction_checks_the_anchor() {
        let base = System::full_shift(2);
        let p = PointValue::BiSeq(BiSeq::periodic(&[0, 1]));
        assert!(matches!(
            System::satellite_extension(base.clone(), p.clone(), 3),
            Err(DynError::NotPeriodic)
        ));
        assert!(matches!(
            System::satellite_extension(base.clone(), p, 4),
            Err(DynError::PeriodNotPrime { period: 4, divisor: 2 })
        ));
        let fixed = PointValue::BiSeq(BiSeq::constant(1));
        assert!(matches!(
            System::satellite_extension(base, fixed, 2),
            Err(DynError::PeriodNotPrime { period: 2, divisor: 1 })
        ));
    }

    #[test]
    fn interval_images() {
        let open = |a: &str, b: &str| {
            let (a, b) = (crate::real::parse_rational(a).unwrap(), crate::real::parse_rational(b).unwrap());
            Region::interval(Interval::open(a, b).unwrap())
        };
        let line = System::doubling_line();
        assert_eq!(line.interval_image(&open("1", "2"), 3).unwrap().to_string(), "(8, 16)");
        let sq = System::squaring();
        assert_eq!(sq.interval_image(&open("0", "1/2"), 2).unwrap().to_string(), "(0, 1/16)");
        assert_eq!(System::tent().interval_image(&open("0", "1"), 1).unwrap().to_string(), "(0, 1]");
        let composed = sq.interval_image(&open("1/3", "2/3"), 1).unwrap();
        let once = Region::interval(composed.hull().unwrap());
        assert_eq!(
            sq.interval_image(&once, 2).unwrap(),
            sq.interval_image(&open("1/3", "2/3"), 3).unwrap()
        );
        assert!(matches!(
            System::full_shift(2).interval_image(&open("0", "1"), 1),
            Err(DynError::CapabilityMissing { .. })
        ));
    }

    #[test]
    fn periodic_point_enumeration() {
        let pts = System::full_shift(2).periodic_points(2).unwrap();
        assert_eq!(pts.points.len(), 4);
        let sq = System::squaring().periodic_points(1).unwrap().points;
        assert_eq!(sq, vec![q("0"), q("1")]);
        let circle = System::doubling_circle().periodic_points(2).unwrap().points;
        assert_eq!(circle, vec![q("0"), q("1/3"), q("2/3")]);
        let tent = System::tent().periodic_points(3).unwrap().points;
        assert_eq!(tent.len(), 8);
        for p in &tent {
            assert_eq!(System::tent().iterate(p, 3).unwrap(), *p);
        }
    }

    #[test]
    fn samples_stay_in_region_and_repeat() {
        let shift = System::full_shift(2);
        let cyl = Region::cylinder(0, vec![1]);
        let pts = shift.sample(&cyl, 10, 7).unwrap();
        assert!(pts.iter().all(|p| p.as_biseq().unwrap().at(0) == 1));
        assert_eq!(pts, shift.sample(&cyl, 10, 7).unwrap());
        let sq = System::squaring();
        let iv = Region::interval(Interval::open(rat(2, 5), rat(3, 5)).unwrap());
        let pts = sq.sample(&iv, 5, 1).unwrap();
        assert_eq!(pts.len(), 5);
        for p in &pts {
            assert!(sq.region_contains(&iv, p).unwrap());
        }
        let outside = Region::interval(Interval::open(int(2), int(3)).unwrap());
        assert!(matches!(sq.sample(&outside, 1, 0), Err(DynError::EmptyRegion)));
    }

    #[test]
    fn circle_ball_wraps() {
        let c = System::doubling_circle();
        let ball = Region::ball(q("1/100"), rat(1, 20));
        let set = c.region_to_intervals(&ball).unwrap();
        assert_eq!(set.parts().len(), 2);
        for p in c.sample(&ball, 50, 3).unwrap() {
            assert!(c.region_contains(&ball, &p).unwrap());
        }
    }

    #[test]
    fn descriptors_round_trip() {
        let systems = [
            System::full_shift(3),
            System::doubling_line(),
            System::squaring(),
            System::tanh_ladder(true),
            System::default_satellite_extension(),
        ];
        for s in systems {
            let text = serde_json::to_string(&s.descriptor()).unwrap();
            let back: SystemDescriptor = serde_json::from_str(&text).unwrap();
            assert_eq!(back.build().unwrap().descriptor(), s.descriptor());
        }
        let bad = r#"{"id":"squaring","alphabet":2}"#;
        assert!(serde_json::from_str::<SystemDescriptor>(bad).is_err());
    }
}
