//! Experiment configuration, read from a versioned TOML file.
//!
//! ```toml
//! version = 1
//! seed = 7
//!
//! [system]
//! id = "full_shift"
//!
//! [operation]
//! op = "entropy_estimate"
//! n_max = 12
//! schedule = ["1/2"]
//! mode = "exact_maximum"
//! ```
//!
//! Rationals are strings (`"1/4"`, `"3"`); points use the library's point syntax.

use std::path::PathBuf;

use anyhow::{bail, Context};
use pointdyn::chaos::{Compact, Maximality};
use pointdyn::expansivity::default_delta_grid;
use pointdyn::real::{pow2, rational_string, rational_vec};
use pointdyn::shadowing::{BatteryTemplate, Segment};
use pointdyn::systems::SystemDescriptor;
use pointdyn::{PointValue, Rational, Region};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub system: SystemDescriptor,
    pub operation: Operation,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: Format,
    /// Directory for `report.json`, `result.json` and, with `format = "csv"`, `result.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallWindow {
    /// `|i| <= horizon`.
    #[default]
    TwoSided,
    /// `0 <= i <= horizon`.
    Forward,
}

fn radii() -> Vec<Rational> {
    vec![pow2(-3), pow2(-4)]
}
fn deltas() -> Vec<Rational> {
    default_delta_grid()
}
fn six() -> u64 {
    6
}
fn sixteen() -> u64 {
    16
}
fn budget() -> usize {
    16
}
fn trials() -> usize {
    8
}
fn length() -> usize {
    16
}
fn probe_count() -> usize {
    10
}
fn period_bound() -> u32 {
    12
}
fn schedule() -> Vec<Rational> {
    pointdyn::chaos::entropy::default_schedule()
}
fn m_grid() -> Vec<u64> {
    vec![4, 6, 8, 12]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operation {
    PointwiseExpansivity {
        x: PointValue,
        #[serde(default = "deltas", with = "rational_vec")]
        delta_grid: Vec<Rational>,
        #[serde(default = "six")]
        horizon: u64,
        #[serde(default = "budget")]
        budget: usize,
    },
    GammaBall {
        x: PointValue,
        #[serde(with = "rational_string")]
        delta: Rational,
        #[serde(default)]
        window: BallWindow,
        /// Restricts the two-sided window to multiples of `m`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<i64>,
        #[serde(default = "six")]
        horizon: u64,
        #[serde(default = "budget")]
        budget: usize,
    },
    NExpansiveCardinality {
        x: PointValue,
        #[serde(with = "rational_string")]
        delta: Rational,
        #[serde(default = "six")]
        horizon: u64,
        #[serde(default = "budget")]
        budget: usize,
    },
    SubgroupContainment {
        x: PointValue,
        #[serde(with = "rational_string")]
        delta: Rational,
        m: i64,
        #[serde(default = "six")]
        horizon: u64,
    },
    CanonicalCoordinates {
        #[serde(with = "rational_string")]
        epsilon: Rational,
        #[serde(default = "deltas", with = "rational_vec")]
        delta_grid: Vec<Rational>,
        #[serde(default = "budget")]
        pair_budget: usize,
        #[serde(default = "six")]
        horizon: u64,
    },
    Sink {
        x: PointValue,
        #[serde(with = "rational_string")]
        delta: Rational,
        #[serde(default = "sixteen")]
        horizon: u64,
        #[serde(default = "budget")]
        budget: usize,
    },
    ShadowablePoint {
        x: PointValue,
        #[serde(with = "rational_string")]
        epsilon: Rational,
        #[serde(default = "deltas", with = "rational_vec")]
        delta_grid: Vec<Rational>,
        #[serde(default = "trials")]
        trials: usize,
        #[serde(default = "length")]
        length: usize,
    },
    MixingPoint {
        x: PointValue,
        #[serde(default = "radii", with = "rational_vec")]
        radii: Vec<Rational>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        probes: Vec<Region>,
        #[serde(default = "probe_count")]
        probe_count: usize,
        #[serde(default = "sixteen")]
        n_max: u64,
    },
    TransitivePoint {
        x: PointValue,
        #[serde(default = "radii", with = "rational_vec")]
        radii: Vec<Rational>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        probes: Vec<Region>,
        #[serde(default = "probe_count")]
        probe_count: usize,
        #[serde(default = "sixteen")]
        n_max: u64,
    },
    MixingTransition {
        u: Region,
        v: Region,
        #[serde(default = "sixteen")]
        n_max: u64,
    },
    SpecificationPoint {
        x: PointValue,
        #[serde(with = "rational_string")]
        epsilon: Rational,
        #[serde(default = "m_grid")]
        m_grid: Vec<u64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        battery: Vec<BatteryTemplate>,
    },
    SpecificationTrace {
        segments: Vec<Segment>,
        gap: u64,
        #[serde(with = "rational_string")]
        epsilon: Rational,
        #[serde(default)]
        periodic: bool,
    },
    Sensitivity {
        x: PointValue,
        #[serde(default = "radii", with = "rational_vec")]
        radii: Vec<Rational>,
        #[serde(default = "sixteen")]
        horizon: u64,
        #[serde(default = "budget")]
        budget: usize,
    },
    DensePeriodic {
        x: PointValue,
        #[serde(default = "radii", with = "rational_vec")]
        radii: Vec<Rational>,
        #[serde(default = "period_bound")]
        period_bound: u32,
    },
    SensitivityConstruction {
        x: PointValue,
        q: PointValue,
        neighbourhood: Region,
        #[serde(default = "sixteen")]
        horizon: u64,
    },
    DevaneyPoint {
        x: PointValue,
        #[serde(default = "radii", with = "rational_vec")]
        radii: Vec<Rational>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        probes: Vec<Region>,
        #[serde(default = "probe_count")]
        probe_count: usize,
        #[serde(default = "sixteen")]
        n_max: u64,
        #[serde(default = "period_bound")]
        period_bound: u32,
        #[serde(default = "sixteen")]
        horizon: u64,
        #[serde(default = "budget")]
        budget: usize,
    },
    SeparatedSet {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        compact: Option<Compact>,
        n: u64,
        #[serde(with = "rational_string")]
        epsilon: Rational,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<Maximality>,
    },
    EntropyEstimate {
        /// Candidate compact sets; the reported rate is the largest over the list.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        compacts: Vec<Compact>,
        #[serde(default = "schedule", with = "rational_vec")]
        schedule: Vec<Rational>,
        #[serde(default = "sixteen")]
        n_max: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<Maximality>,
    },
    EntropyCertificate {
        x: PointValue,
        y: PointValue,
        #[serde(with = "rational_string")]
        epsilon: Rational,
        m: u64,
        n: u64,
    },
}

impl Operation {
    pub fn id(&self) -> &'static str {
        match self {
            Operation::PointwiseExpansivity { .. } => "pointwise_expansivity",
            Operation::GammaBall { .. } => "gamma_ball",
            Operation::NExpansiveCardinality { .. } => "n_expansive_cardinality",
            Operation::SubgroupContainment { .. } => "subgroup_containment",
            Operation::CanonicalCoordinates { .. } => "canonical_coordinates",
            Operation::Sink { .. } => "sink",
            Operation::ShadowablePoint { .. } => "shadowable_point",
            Operation::MixingPoint { .. } => "mixing_point",
            Operation::TransitivePoint { .. } => "transitive_point",
            Operation::MixingTransition { .. } => "mixing_transition",
            Operation::SpecificationPoint { .. } => "specification_point",
            Operation::SpecificationTrace { .. } => "specification_trace",
            Operation::Sensitivity { .. } => "sensitivity",
            Operation::DensePeriodic { .. } => "dense_periodic",
            Operation::SensitivityConstruction { .. } => "sensitivity_construction",
            Operation::DevaneyPoint { .. } => "devaney_point",
            Operation::SeparatedSet { .. } => "separated_set",
            Operation::EntropyEstimate { .. } => "entropy_estimate",
            Operation::EntropyCertificate { .. } => "entropy_certificate",
        }
    }
}

impl ExperimentConfig {
    pub fn new(system: SystemDescriptor, operation: Operation, seed: u64) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            seed,
            system,
            operation,
            output: OutputSpec::default(),
        }
    }

    /// Parses TOML, reporting schema violations with their field path.
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let de = toml::Deserializer::parse(text).context("config is not valid TOML")?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("config field `{path}`: {}", e.into_inner().message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.version != CONFIG_VERSION {
            bail!("config field `version`: unsupported version {} (expected {CONFIG_VERSION})", self.version);
        }
        self.system.build().context("config field `system`")?;
        let positive = |name: &str, q: &Rational| -> anyhow::Result<()> {
            if *q <= Rational::from_integer(0.into()) {
                bail!("config field `operation.{name}`: must be positive");
            }
            Ok(())
        };
        match &self.operation {
            Operation::EntropyEstimate { n_max, .. } if *n_max < 2 => {
                bail!("config field `operation.n_max`: must be at least 2")
            }
            Operation::EntropyCertificate { n, .. } if *n > 12 => {
                bail!("config field `operation.n`: at most 12 (2^(n+1) tracers)")
            }
            Operation::GammaBall { delta, .. }
            | Operation::NExpansiveCardinality { delta, .. }
            | Operation::SubgroupContainment { delta, .. }
            | Operation::Sink { delta, .. } => positive("delta", delta)?,
            Operation::CanonicalCoordinates { epsilon, .. }
            | Operation::ShadowablePoint { epsilon, .. }
            | Operation::SpecificationPoint { epsilon, .. }
            | Operation::SpecificationTrace { epsilon, .. }
            | Operation::SeparatedSet { epsilon, .. }
            | Operation::EntropyCertificate { epsilon, .. } => positive("epsilon", epsilon)?,
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "version = 1\n[system]\nid = \"full_shift\"\n";

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml(&format!("{HEAD}[operation]\nop = \"entropy_estimate\"\n")).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.output.format, Format::Json);
        match cfg.operation {
            Operation::EntropyEstimate { schedule, n_max, .. } => {
                assert_eq!(schedule.len(), 8);
                assert_eq!(n_max, 16);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_names_the_field() {
        let err = ExperimentConfig::from_toml(&format!("{HEAD}[operation]\nop = \"entropy_estimate\"\nn_max = 1\n")).unwrap_err();
        assert!(format!("{err:#}").contains("operation.n_max"));
        let err = ExperimentConfig::from_toml(&format!("{HEAD}[operation]\nop = \"sink\"\nx = \"(0)(0)@0\"\ndelta = \"-1/4\"\n")).unwrap_err();
        assert!(format!("{err:#}").contains("operation.delta"));
        let err = ExperimentConfig::from_toml(&format!("{HEAD}[operation]\nop = \"entropy_certificate\"\nx = \"(0)(0)@0\"\ny = \"(1)(1)@0\"\nepsilon = \"3/10\"\nm = 4\nn = 13\n")).unwrap_err();
        assert!(format!("{err:#}").contains("operation.n"));
    }

    #[test]
    fn unknown_operation_is_rejected() {
        let err = ExperimentConfig::from_toml(&format!("{HEAD}[operation]\nop = \"teleport\"\n")).unwrap_err();
        assert!(format!("{err:#}").contains("operation"));
    }
}
