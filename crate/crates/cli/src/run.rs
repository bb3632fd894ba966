//! Dispatch of one experiment config to the library and assembly of its report.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use pointdyn::chaos::{
    check_sensitivity_construction, dense_periodic_at_point, devaney_point_verdict, entropy_certificate_from_spec_points, entropy_estimate,
    sensitivity_constant_from_periodic, sensitivity_witness, separated_set, verify_entropy_certificate, Compact, DevaneyParams, EntropyEstimate,
    Maximality,
};
use pointdyn::expansivity::local::{canonical_coordinates_check, sink_check};
use pointdyn::expansivity::{gamma_ball, n_expansive_cardinality, pointwise_expansivity_verdict, subgroup_containment, Window};
use pointdyn::real::{format_rational, int};
use pointdyn::shadowing::{
    default_battery, default_probes, mixing_point_verdict, mixing_transition_time, shadowable_point_verdict, specification_point_verdict,
    specification_trace_symbolic, trace_targets, transitive_point_verdict, SpecSegments, TraceOutcome, Transition,
};
use pointdyn::systems::SystemKind;
use pointdyn::verdict::Verdict;
use pointdyn::{DynError, Region, System};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certificate::{CertificateRecord, TraceRecord};
use crate::config::{BallWindow, ExperimentConfig, Format, Operation};

/// Exit code for configuration and contract errors.
pub const EXIT_ERROR: i32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub operation: String,
    /// `holds`, `fails`, `inconclusive` or `done` (estimates and constructions).
    pub status: String,
    pub exit_code: i32,
    /// No floating-point point or distance appears in the result.
    pub exact: bool,
    pub result: Value,
    /// Excluded from the deterministic payload.
    pub wall_time_ms: u64,
}

/// The result of one operation before it is wrapped into a report.
pub struct Outcome {
    pub result: Value,
    pub exit_code: i32,
    pub csv: Option<String>,
}

fn value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("results serialize")
}

fn verdict(v: Verdict) -> Outcome {
    let exit_code = v.outcome.exit_code();
    let mut csv = String::from("operation,outcome,horizon,seed\n");
    for w in std::iter::once(&v).chain(&v.parts) {
        csv.push_str(&format!("{},{},{},{}\n", w.operation, value(&w.outcome).as_str().unwrap_or(""), w.horizon, w.seed));
    }
    Outcome {
        result: value(&v),
        exit_code,
        csv: Some(csv),
    }
}

fn done(result: Value) -> Outcome {
    Outcome {
        result,
        exit_code: 0,
        csv: None,
    }
}

fn is_shift(system: &System) -> bool {
    matches!(system.kind(), SystemKind::FullShift { .. } | SystemKind::OneSidedShift { .. })
}

/// The compact set used when a run names none: all words for shifts, a 257-point grid of the
/// domain (of `[0, 1]` for the doubling line) otherwise.
pub fn default_compact(system: &System) -> Compact {
    if is_shift(system) {
        return Compact::Words {};
    }
    match system.domain_interval() {
        Some(d) if !matches!(system.kind(), SystemKind::DoublingLine { .. }) => Compact::Grid {
            lo: d.lo.clone(),
            hi: d.hi.clone(),
            points: 257,
        },
        Some(_) => Compact::Grid {
            lo: int(0),
            hi: int(1),
            points: 257,
        },
        None => Compact::Sample {
            region: system.whole_region(),
            budget: 256,
            seed: 0,
        },
    }
}

fn default_mode(system: &System) -> Maximality {
    if is_shift(system) {
        Maximality::ExactMaximum
    } else {
        Maximality::GreedyMaximal
    }
}

/// Entropy over a list of compact sets; the reported rate is the largest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub label: String,
    pub rate: f64,
    pub residual: f64,
    pub estimates: Vec<EntropyEstimate>,
}

pub fn entropy_report(system: &System, compacts: &[Compact], schedule: &[pointdyn::Rational], n_max: u64, mode: Maximality) -> pointdyn::Result<EntropyReport> {
    let estimates = compacts
        .iter()
        .map(|k| entropy_estimate(system, k, schedule, n_max, mode))
        .collect::<pointdyn::Result<Vec<_>>>()?;
    let best = estimates
        .iter()
        .enumerate()
        .fold(0, |b, (i, e)| if e.rate > estimates[b].rate { i } else { b });
    Ok(EntropyReport {
        label: format!("max over {} compact set(s)", estimates.len()),
        rate: estimates[best].rate,
        residual: estimates[best].residual,
        estimates,
    })
}

fn probes_or_default(system: &System, probes: &[Region], count: usize, seed: u64) -> pointdyn::Result<Vec<Region>> {
    if probes.is_empty() {
        default_probes(system, count, seed)
    } else {
        Ok(probes.to_vec())
    }
}

/// Runs the configured operation.
pub fn execute(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let system = cfg.system.build()?;
    let seed = cfg.seed;
    Ok(match &cfg.operation {
        Operation::PointwiseExpansivity {
            x,
            delta_grid,
            horizon,
            budget,
        } => {
            let (delta, v) = pointwise_expansivity_verdict(&system, x, delta_grid, *horizon, *budget, seed)?;
            let mut o = verdict(v);
            o.result = json!({"delta": delta.as_ref().map(format_rational), "verdict": o.result});
            o
        }
        Operation::GammaBall {
            x,
            delta,
            window,
            m,
            horizon,
            budget,
        } => {
            let w = match (window, m) {
                (_, Some(m)) => Window::Subgroup { m: *m, horizon: *horizon },
                (BallWindow::TwoSided, None) => Window::TwoSided { horizon: *horizon },
                (BallWindow::Forward, None) => Window::OneSided { horizon: *horizon },
            };
            done(value(&gamma_ball(&system, x, delta, w, *budget, seed)?))
        }
        Operation::NExpansiveCardinality { x, delta, horizon, budget } => {
            done(value(&n_expansive_cardinality(&system, x, delta, *horizon, *budget, seed)?))
        }
        Operation::SubgroupContainment { x, delta, m, horizon } => {
            let c = subgroup_containment(&system, x, delta, *m, *horizon)?;
            let ok = c.subgroup_inside_full && c.full_inside_subgroup;
            Outcome {
                result: value(&c),
                exit_code: if ok { 0 } else { 1 },
                csv: None,
            }
        }
        Operation::CanonicalCoordinates {
            epsilon,
            delta_grid,
            pair_budget,
            horizon,
        } => verdict(canonical_coordinates_check(&system, epsilon, delta_grid, *pair_budget, *horizon, seed)?),
        Operation::Sink { x, delta, horizon, budget } => verdict(sink_check(&system, x, delta, *horizon, *budget, seed)?),
        Operation::ShadowablePoint {
            x,
            epsilon,
            delta_grid,
            trials,
            length,
        } => verdict(shadowable_point_verdict(&system, x, epsilon, delta_grid, *trials, *length, seed)?),
        Operation::MixingPoint {
            x,
            radii,
            probes,
            probe_count,
            n_max,
        } => {
            let probes = probes_or_default(&system, probes, *probe_count, seed)?;
            verdict(mixing_point_verdict(&system, x, radii, &probes, *n_max, seed)?)
        }
        Operation::TransitivePoint {
            x,
            radii,
            probes,
            probe_count,
            n_max,
        } => {
            let probes = probes_or_default(&system, probes, *probe_count, seed)?;
            verdict(transitive_point_verdict(&system, x, radii, &probes, *n_max, seed)?)
        }
        Operation::MixingTransition { u, v, n_max } => {
            let t = mixing_transition_time(&system, u, v, *n_max, seed)?;
            let exit_code = match t {
                Transition::Time { .. } => 0,
                Transition::Escapes(_) => 1,
                Transition::Inconclusive => 2,
            };
            Outcome {
                result: value(&t),
                exit_code,
                csv: None,
            }
        }
        Operation::SpecificationPoint { x, epsilon, m_grid, battery } => {
            let battery = if battery.is_empty() {
                default_battery(&system, seed)
            } else {
                battery.clone()
            };
            verdict(specification_point_verdict(&system, x, epsilon, m_grid, &battery, seed)?)
        }
        Operation::SpecificationTrace {
            segments,
            gap,
            epsilon,
            periodic,
        } => {
            let spec = SpecSegments {
                segments: segments.clone(),
                gap: *gap,
                epsilon: epsilon.clone(),
            };
            spec.validate(&system)?;
            let targets = spec.targets(&system)?;
            let outcome = if *periodic {
                TraceOutcome::Traced(specification_trace_symbolic(&system, &spec, true)?)
            } else {
                trace_targets(&system, &targets, epsilon, seed)?
            };
            let exit_code = match &outcome {
                TraceOutcome::Traced(_) => 0,
                TraceOutcome::Failed(f) if f.certificate.is_some() => 1,
                TraceOutcome::Failed(_) => 2,
            };
            let record = CertificateRecord::Trace(TraceRecord {
                system: system.descriptor(),
                epsilon: epsilon.clone(),
                targets,
                outcome,
            });
            Outcome {
                result: value(&record),
                exit_code,
                csv: None,
            }
        }
        Operation::Sensitivity { x, radii, horizon, budget } => verdict(sensitivity_witness(&system, x, radii, *horizon, *budget, seed)?),
        Operation::DensePeriodic { x, radii, period_bound } => verdict(dense_periodic_at_point(&system, x, radii, *period_bound)?),
        Operation::SensitivityConstruction {
            x,
            q,
            neighbourhood,
            horizon,
        } => match sensitivity_constant_from_periodic(&system, x, q, neighbourhood, *horizon) {
            Ok(c) => {
                let verified = check_sensitivity_construction(&system, &c)?;
                Outcome {
                    result: json!({"construction": value(&c), "verified": verified}),
                    exit_code: if verified { 0 } else { EXIT_ERROR },
                    csv: None,
                }
            }
            Err(e @ (DynError::NoPeriodicInNeighborhood | DynError::NoTransitiveVisit)) => Outcome {
                result: json!({"inconclusive": e.to_string()}),
                exit_code: 2,
                csv: None,
            },
            Err(e) => return Err(e.into()),
        },
        Operation::DevaneyPoint {
            x,
            radii,
            probes,
            probe_count,
            n_max,
            period_bound,
            horizon,
            budget,
        } => {
            let params = DevaneyParams {
                radii: radii.clone(),
                probes: probes_or_default(&system, probes, *probe_count, seed)?,
                n_max: *n_max,
                period_bound: *period_bound,
                horizon: *horizon,
                budget: *budget,
                seed,
            };
            verdict(devaney_point_verdict(&system, x, &params)?)
        }
        Operation::SeparatedSet { compact, n, epsilon, mode } => {
            let k = compact.clone().unwrap_or_else(|| default_compact(&system));
            let s = separated_set(&system, &k, *n, epsilon, mode.unwrap_or_else(|| default_mode(&system)))?;
            let verified = s.verify(&system)?;
            let mut csv = String::from("index,point\n");
            for (i, p) in s.points.iter().enumerate() {
                csv.push_str(&format!("{i},{p}\n"));
            }
            Outcome {
                result: json!({"count": s.points.len(), "verified": verified, "set": value(&s)}),
                exit_code: if verified { 0 } else { EXIT_ERROR },
                csv: Some(csv),
            }
        }
        Operation::EntropyEstimate {
            compacts,
            schedule,
            n_max,
            mode,
        } => {
            let ks = if compacts.is_empty() {
                vec![default_compact(&system)]
            } else {
                compacts.clone()
            };
            let r = entropy_report(&system, &ks, schedule, *n_max, mode.unwrap_or_else(|| default_mode(&system)))?;
            let best = r
                .estimates
                .iter()
                .find(|e| e.rate == r.rate)
                .map(|e| e.to_csv());
            Outcome {
                result: value(&r),
                exit_code: 0,
                csv: best,
            }
        }
        Operation::EntropyCertificate { x, y, epsilon, m, n } => {
            let cert = entropy_certificate_from_spec_points(&system, x, y, epsilon, *m, *n, seed)?;
            let problems = verify_entropy_certificate(&cert)?;
            if !problems.is_empty() {
                anyhow::bail!("certificate failed its own check: {}", problems.join("; "));
            }
            done(value(&CertificateRecord::EntropyCertificate(cert)))
        }
    })
}

fn has_approx(v: &Value) -> bool {
    match v {
        Value::String(s) => s.starts_with('~'),
        Value::Array(a) => a.iter().any(has_approx),
        Value::Object(o) => o.values().any(has_approx),
        _ => false,
    }
}

fn status(op: &Operation, exit_code: i32) -> &'static str {
    let estimate = matches!(
        op,
        Operation::GammaBall { .. }
            | Operation::NExpansiveCardinality { .. }
            | Operation::SeparatedSet { .. }
            | Operation::EntropyEstimate { .. }
            | Operation::EntropyCertificate { .. }
    );
    match exit_code {
        0 if estimate => "done",
        0 => "holds",
        1 => "fails",
        2 => "inconclusive",
        _ => "error",
    }
}

/// Runs the config and wraps the result.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<(RunReport, Option<String>)> {
    cfg.validate()?;
    let start = Instant::now();
    let out = execute(cfg)?;
    let report = RunReport {
        tool: "pointdyn".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        operation: cfg.operation.id().into(),
        status: status(&cfg.operation, out.exit_code).into(),
        exit_code: out.exit_code,
        exact: !has_approx(&out.result),
        result: out.result,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };
    Ok((report, out.csv))
}

/// The deterministic part of a report: everything but the wall time.
pub fn payload(report: &RunReport) -> String {
    let mut v = value(report);
    v.as_object_mut().expect("reports are objects").remove("wall_time_ms");
    let mut s = serde_json::to_string_pretty(&v).expect("payload serializes");
    s.push('\n');
    s
}

/// Writes `report.json`, `result.json` (the deterministic payload) and, for CSV output, `result.csv`.
pub fn write_report(dir: &Path, report: &RunReport, csv: Option<&str>, format: Format) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    fs::write(dir.join("result.json"), payload(report))?;
    if format == Format::Csv {
        match csv {
            Some(c) => fs::write(dir.join("result.csv"), c)?,
            None => eprintln!("note: `{}` has no CSV form; wrote JSON only", report.operation),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approx_flag_looks_inside_strings() {
        assert!(has_approx(&serde_json::json!({"a": ["1/2", "~0.25"]})));
        assert!(!has_approx(&serde_json::json!({"a": ["1/2", 3]})));
    }

    #[test]
    fn payload_drops_the_clock() {
        let cfg = ExperimentConfig::from_toml("version = 1\n[system]\nid = \"full_shift\"\n[operation]\nop = \"entropy_estimate\"\nn_max = 4\n").unwrap();
        let (report, _) = run(&cfg).unwrap();
        assert_eq!(report.exit_code, 0);
        assert!(!payload(&report).contains("wall_time_ms"));
    }
}
