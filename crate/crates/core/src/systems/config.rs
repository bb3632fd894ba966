//! Structured system descriptors, as read from experiment configs.

use serde::{Deserialize, Serialize};

use crate::error::{DynError, Result};
use crate::point::PointValue;
use crate::real::{format_rational, parse_rational};

use super::{System, SystemKind};

fn two() -> u8 {
    2
}

/// ```toml
/// id = "full_shift"
/// alphabet = 2
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemDescriptor {
    FullShift {
        #[serde(default = "two")]
        alphabet: u8,
    },
    OneSidedShift {
        #[serde(default = "two")]
        alphabet: u8,
    },
    DoublingLine {
        /// Right end of the sampling window, as a rational string.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<String>,
    },
    Squaring {},
    Tent {},
    DoublingCircle {},
    Identity {},
    TanhLadder {
        #[serde(default)]
        with_limits: bool,
    },
    /// Satellites over a full shift; defaults to the period-2 point `...0101...`.
    SatelliteExtension {
        #[serde(default = "two")]
        alphabet: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<u32>,
    },
}

impl SystemDescriptor {
    pub fn build(&self) -> Result<System> {
        let alphabet_ok = |a: u8| {
            if a < 2 {
                Err(DynError::InvalidParameter(format!("alphabet {a} < 2")))
            } else {
                Ok(a)
            }
        };
        Ok(match self {
            SystemDescriptor::FullShift { alphabet } => System::full_shift(alphabet_ok(*alphabet)?),
            SystemDescriptor::OneSidedShift { alphabet } => System::one_sided_shift(alphabet_ok(*alphabet)?),
            SystemDescriptor::DoublingLine { window: None } => System::doubling_line(),
            SystemDescriptor::DoublingLine { window: Some(w) } => {
                let w = parse_rational(w)?;
                if w <= crate::real::int(0) {
                    return Err(DynError::InvalidParameter("window must be positive".into()));
                }
                System::doubling_line_with_window(w)
            }
            SystemDescriptor::Squaring {} => System::squaring(),
            SystemDescriptor::Tent {} => System::tent(),
            SystemDescriptor::DoublingCircle {} => System::doubling_circle(),
            SystemDescriptor::Identity {} => System::identity(),
            SystemDescriptor::TanhLadder { with_limits } => System::tanh_ladder(*with_limits),
            SystemDescriptor::SatelliteExtension {
                alphabet,
                anchor,
                period,
            } => {
                let base = System::full_shift(alphabet_ok(*alphabet)?);
                let anchor: PointValue = anchor.as_deref().unwrap_or("(01)(01)@0").parse()?;
                let period = match period {
                    Some(t) => *t,
                    None => match &anchor {
                        PointValue::BiSeq(s) => s.period().ok_or(DynError::NotPeriodic)? as u32,
                        _ => return Err(DynError::NotPeriodic),
                    },
                };
                System::satellite_extension(base, anchor, period)?
            }
        })
    }

    pub(crate) fn of(system: &System) -> Self {
        match system.kind() {
            SystemKind::FullShift { alphabet } => SystemDescriptor::FullShift { alphabet: *alphabet },
            SystemKind::OneSidedShift { alphabet } => SystemDescriptor::OneSidedShift { alphabet: *alphabet },
            SystemKind::DoublingLine { window } => SystemDescriptor::DoublingLine {
                window: Some(format_rational(window)),
            },
            SystemKind::Squaring => SystemDescriptor::Squaring {},
            SystemKind::Tent => SystemDescriptor::Tent {},
            SystemKind::DoublingCircle => SystemDescriptor::DoublingCircle {},
            SystemKind::Identity => SystemDescriptor::Identity {},
            SystemKind::Ladder { with_limits } => SystemDescriptor::TanhLadder {
                with_limits: *with_limits,
            },
            SystemKind::Satellite(s) => SystemDescriptor::SatelliteExtension {
                alphabet: s.base().alphabet().unwrap_or(2),
                anchor: Some(s.anchor().to_string()),
                period: Some(s.period()),
            },
        }
    }

    /// Every system id with a one-line description.
    pub fn catalogue() -> Vec<(&'static str, &'static str)> {
        vec![
            ("full_shift", "two-sided full shift on `alphabet` symbols (default 2)"),
            ("one_sided_shift", "one-sided full shift on `alphabet` symbols (default 2)"),
            ("doubling_line", "f(x) = 2x on [0, inf), samples drawn from [0, window], window default 2^20"),
            ("squaring", "f(x) = x^2 on [0, 1]"),
            ("tent", "tent map on [0, 1]"),
            ("doubling_circle", "f(x) = 2x mod 1 on [0, 1)"),
            ("identity", "identity on [0, 1]"),
            ("tanh_ladder", "identity on {tanh(i)} with the limits a = 1, b = -1 when `with_limits`"),
            (
                "satellite_extension",
                "full shift plus satellite orbits q(i,k,j) around a periodic `anchor` of prime `period`",
            ),
        ]
    }
}
