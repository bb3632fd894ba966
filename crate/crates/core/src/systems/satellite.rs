//! Compound system `Y ∪ E`: a base system `Y` plus countably many satellite points
//! `q(i, k, j)` (copy `i ∈ {1,2,3}`, level `k ≥ 1`, phase `j < t`) that rotate through
//! the phases in step with a periodic anchor `p` of prime period `t`, at distance `1/k`.

use num_traits::Zero;

use crate::error::{DynError, Result};
use crate::point::{PointValue, SatellitePoint};
use crate::real::{rat, Real};

use super::System;

#[derive(Clone, Debug)]
pub struct SatelliteExtension {
    pub(crate) base: System,
    pub(crate) anchor: PointValue,
    pub(crate) period: u32,
    /// `g^j(p)` for `j < period`.
    pub(crate) anchor_orbit: Vec<PointValue>,
}

impl SatelliteExtension {
    pub fn base(&self) -> &System {
        &self.base
    }

    pub fn anchor(&self) -> &PointValue {
        &self.anchor
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub(crate) fn phase_point(&self, phase: u32) -> &PointValue {
        &self.anchor_orbit[phase as usize]
    }

    pub(crate) fn check(&self, p: &SatellitePoint) -> Result<()> {
        match p {
            SatellitePoint::Base(b) => self.base.check_point(b),
            SatellitePoint::Orbit { copy, level, phase } => {
                if !(1..=3).contains(copy) || *level == 0 || *phase >= self.period {
                    Err(DynError::DomainViolation(format!(
                        "satellite index ({copy},{level},{phase}) outside {{1,2,3}}×N⁺×[0,{})",
                        self.period
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub(crate) fn iterate(&self, p: &SatellitePoint, n: i64) -> Result<SatellitePoint> {
        Ok(match p {
            SatellitePoint::Base(b) => SatellitePoint::Base(Box::new(self.base.iterate(b, n)?)),
            SatellitePoint::Orbit { copy, level, phase } => SatellitePoint::Orbit {
                copy: *copy,
                level: *level,
                phase: ((*phase as i64 + n).rem_euclid(self.period as i64)) as u32,
            },
        })
    }

    /// The six-case metric. For distinct copies with different level or phase no formula
    /// is given; those pairs fall back on the same-copy formula `1/k + 1/m + d0(g^j p, g^r p)`.
    pub(crate) fn distance(&self, a: &SatellitePoint, b: &SatellitePoint) -> Result<Real> {
        use SatellitePoint::*;
        Ok(match (a, b) {
            (Base(x), Base(y)) => self.base.distance(x, y)?,
            (Orbit { level, phase, .. }, Base(y)) | (Base(y), Orbit { level, phase, .. }) => {
                Real::Exact(rat(1, *level as i64)).add(&self.base.distance(self.phase_point(*phase), y)?)
            }
            (
                Orbit {
                    copy: i,
                    level: k,
                    phase: j,
                },
                Orbit {
                    copy: l,
                    level: m,
                    phase: r,
                },
            ) => {
                if (i, k, j) == (l, m, r) {
                    Real::Exact(num_rational::BigRational::zero())
                } else if i != l && k == m && j == r {
                    Real::Exact(rat(1, *k as i64))
                } else {
                    Real::Exact(rat(1, *k as i64) + rat(1, *m as i64))
                        .add(&self.base.distance(self.phase_point(*j), self.phase_point(*r))?)
                }
            }
        })
    }
}
