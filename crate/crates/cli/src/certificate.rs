//! Self-contained certificate records and their independent re-verification.

use anyhow::Context;
use pointdyn::chaos::{verify_entropy_certificate, EntropyCertificate};
use pointdyn::real::rational_string;
use pointdyn::shadowing::{check_infeasibility, target_error, InfeasibilityCertificate, TraceOutcome};
use pointdyn::systems::SystemDescriptor;
use pointdyn::interval::IntervalSet;
use pointdyn::{PointValue, Rational, Real, Region, System};
use serde::{Deserialize, Serialize};

/// A tracer (or a proof that none exists) for targets `d(f^t z, p) < epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub system: SystemDescriptor,
    #[serde(with = "rational_string")]
    pub epsilon: Rational,
    pub targets: Vec<(u64, PointValue)>,
    pub outcome: TraceOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum CertificateRecord {
    EntropyCertificate(EntropyCertificate),
    Trace(TraceRecord),
}

/// Reads a record, either bare or as the `result` of a run report.
pub fn parse_record(text: &str) -> anyhow::Result<CertificateRecord> {
    let value: serde_json::Value = serde_json::from_str(text).context("certificate is not JSON")?;
    let inner = match value.get("result") {
        Some(r) if value.get("record").is_none() => r.clone(),
        _ => value,
    };
    serde_path_to_error::deserialize(inner).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("certificate field `{path}`: {}", e.into_inner())
    })
}

/// Every problem found; an empty list means the record checks out.
pub fn verify_record(record: &CertificateRecord) -> anyhow::Result<Vec<String>> {
    match record {
        CertificateRecord::EntropyCertificate(c) => Ok(verify_entropy_certificate(c)?),
        CertificateRecord::Trace(t) => verify_trace(t),
    }
}

fn verify_trace(t: &TraceRecord) -> anyhow::Result<Vec<String>> {
    let system = t.system.build()?;
    let mut problems = Vec::new();
    if t.targets.is_empty() {
        problems.push("no targets".to_string());
        return Ok(problems);
    }
    for (_, p) in &t.targets {
        system.check_point(p)?;
    }
    match &t.outcome {
        TraceOutcome::Traced(r) => {
            system.check_point(&r.tracer)?;
            let err = target_error(&system, &r.tracer, &t.targets)?;
            if !err.lt(&Real::Exact(t.epsilon.clone())) {
                problems.push(format!("tracer error {err} is not below epsilon"));
            }
            if let Some(p) = r.period {
                if system.iterate(&r.tracer, p as i64)? != r.tracer {
                    problems.push(format!("tracer is not fixed by f^{p}"));
                }
            }
        }
        TraceOutcome::Failed(f) => match &f.certificate {
            None => problems.push("failure carries no certificate".to_string()),
            Some(cert) => {
                if let InfeasibilityCertificate::SymbolConflict {
                    first,
                    first_target,
                    second,
                    second_target,
                    epsilon,
                    ..
                } = cert
                {
                    let listed = |i: &u64, p: &PointValue| t.targets.iter().any(|(s, q)| s == i && q == p);
                    if !listed(first, first_target) || !listed(second, second_target) || *epsilon != t.epsilon {
                        problems.push("conflict does not refer to the listed targets".to_string());
                    }
                }
                if let InfeasibilityCertificate::EmptyForwardImage { constraints, .. } = cert {
                    if *constraints != target_constraints(&system, t)? {
                        problems.push("constraints are not the target balls".to_string());
                    }
                }
                if !check_infeasibility(&system, cert)? {
                    problems.push("infeasibility certificate does not check".to_string());
                }
            }
        },
    }
    Ok(problems)
}

/// `B_epsilon(p)` at each target time, intersected when a time repeats.
fn target_constraints(system: &System, t: &TraceRecord) -> anyhow::Result<Vec<Option<IntervalSet>>> {
    let last = t.targets.iter().map(|p| p.0).max().unwrap_or(0) as usize;
    let mut out: Vec<Option<IntervalSet>> = vec![None; last + 1];
    for (i, p) in &t.targets {
        let ball = system.region_to_intervals(&Region::ball(p.clone(), t.epsilon.clone()))?;
        let slot = &mut out[*i as usize];
        *slot = Some(match slot.take() {
            Some(c) => c.intersect(&ball),
            None => ball,
        });
    }
    Ok(out)
}
