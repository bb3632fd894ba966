//! The acceptance table: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use pointdyn::chaos::{entropy_certificate_from_spec_points, entropy_estimate, separated_set, Compact, Disjunct, Maximality};
use pointdyn::expansivity::{
    default_delta_grid, gamma_ball, measure_of_ball, pointwise_expansivity_verdict, subgroup_containment, BallRepr, MeasureModel, MeasureValue,
    Window,
};
use pointdyn::point::{LadderPoint, SatellitePoint};
use pointdyn::real::{int, pow2, rat};
use pointdyn::shadowing::{
    check_escape, check_infeasibility, default_battery, default_probes, mixing_point_verdict, shadowable_point_verdict,
    specification_point_verdict,
};
use pointdyn::symbolic::BiSeq;
use pointdyn::verdict::Witness;
use pointdyn::{PointValue, Rational, System};
use pointdyn_cli::suite::{deleted_ball_periodics, sensitivity_constructions, shift_points, spec_implies_mixing, SuiteName};
use pointdyn_cli::CertificateRecord;

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn scratch(name: &str) -> PathBuf {
    let p = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = fs::remove_dir_all(&p);
    fs::create_dir_all(&p).expect("scratch directory");
    p
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pointdyn"))
}

/// Word `w` on `[0, n)` over zeros; separated at time `i` exactly when `d(σ^i u, σ^i v) = 2^-k > 1/2`,
/// i.e. the symbols at `i` differ.
fn brute_force_separated(u: &[u8], v: &[u8], n: usize, eps: &Rational) -> bool {
    let sym = |w: &[u8], j: i64| if (0..w.len() as i64).contains(&j) { w[j as usize] } else { 0 };
    (0..n as i64).any(|i| {
        let k = (0..=(n as i64 + 1)).find(|&k| sym(u, i + k) != sym(v, i + k) || sym(u, i - k) != sym(v, i - k));
        match k {
            Some(k) => pow2(-k) > *eps,
            None => false,
        }
    })
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let shift = System::full_shift(2);
    let half = rat(1, 2);
    for n in 1..=8usize {
        let words: Vec<Vec<u8>> = (0..1u32 << n).map(|m| (0..n).map(|b| ((m >> b) & 1) as u8).collect()).collect();
        for a in 0..words.len() {
            for b in a + 1..words.len() {
                ensure(brute_force_separated(&words[a], &words[b], n, &half), format!("oracle: pair {a},{b} at n={n}"))?;
            }
        }
        let s = separated_set(&shift, &Compact::Words {}, n as u64, &half, Maximality::ExactMaximum).map_err(e)?;
        ensure(s.points.len() == words.len(), format!("n={n}: exact count {} vs oracle {}", s.points.len(), words.len()))?;
    }
    let est = entropy_estimate(&shift, &Compact::Words {}, &[half], 12, Maximality::ExactMaximum).map_err(e)?;
    for r in &est.rows {
        ensure(r.count == 1u64 << r.n, format!("s_{} = {}", r.n, r.count))?;
    }
    let ln2 = std::f64::consts::LN_2;
    ensure((est.rate - ln2).abs() <= 1e-12, format!("rate {}", est.rate))?;
    ensure(est.residual <= 1e-12, format!("residual {}", est.residual))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, format!("runtime {secs:.2}s"))?;
    Ok(format!("s_n(1/2) = 2^n for n <= 12, rate {:.12}, residual {:.1e}, {secs:.2}s", est.rate, est.residual))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let shift = System::full_shift(2);
    let x = PointValue::BiSeq(BiSeq::constant(0));
    let y = PointValue::BiSeq(BiSeq::constant(1));
    let cert = entropy_certificate_from_spec_points(&shift, &x, &y, &rat(3, 10), 4, 6, 0).map_err(e)?;
    ensure(cert.family.len() == 128, format!("{} tracers", cert.family.len()))?;
    // d > 0.3 means d is 1 or 1/2: a disagreement within distance 1 of the compared coordinate.
    let seqs: Vec<&BiSeq> = cert.family.iter().map(|p| p.as_biseq().expect("shift tracers")).collect();
    let mut failures = 0;
    for a in 0..seqs.len() {
        for b in a + 1..seqs.len() {
            let sep = (0..28i64).any(|i| (-1..=1).any(|j| seqs[a].at(i + j) != seqs[b].at(i + j)));
            failures += !sep as usize;
        }
    }
    ensure(failures == 0, format!("{failures} unseparated pairs"))?;
    ensure((cert.bound - std::f64::consts::LN_2 / 4.0).abs() < 1e-15 && cert.bound_expr == "log(2)/4", "bound")?;
    let dir = scratch("criterion2");
    let path = dir.join("certificate.json");
    fs::write(&path, serde_json::to_string(&CertificateRecord::EntropyCertificate(cert.clone())).map_err(e)?).map_err(e)?;
    let status = bin().arg("verify-certificate").arg(&path).output().map_err(e)?;
    ensure(status.status.code() == Some(0), format!("verify-certificate exit {:?}", status.status.code()))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("runtime {secs:.2}s"))?;
    Ok(format!("128 tracers, 8128 pairs (28, 0.3)-separated, bound {:.6}, verifier ok, {secs:.2}s", cert.bound))
}

fn criterion_3() -> Verdict {
    let line = System::doubling_line();
    let radii = [rat(1, 8), rat(1, 16)];
    let probes = default_probes(&line, 0, 0).map_err(e)?;
    for x in [rat(1, 2), int(1), int(2)] {
        let v = mixing_point_verdict(&line, &PointValue::exact(x.clone()), &radii, &probes, 12, 0).map_err(e)?;
        match &v.witness {
            Some(Witness::Escape(c)) if v.outcome.fails() => ensure(check_escape(&line, c).map_err(e)?, format!("escape at {x} does not check"))?,
            _ => return Err(format!("mixing at {x}: no escape certificate")),
        }
    }
    for x in [int(0), rat(1, 2), int(1), int(2)] {
        let v = shadowable_point_verdict(&line, &PointValue::exact(x.clone()), &rat(1, 10), &[rat(1, 20), rat(1, 40)], 4, 10, 0).map_err(e)?;
        ensure(v.outcome.holds(), format!("shadowable at {x}: {:?}", v.outcome))?;
    }
    let zero = PointValue::exact(int(0));
    let v = specification_point_verdict(&line, &zero, &rat(1, 10), &[1, 2, 4, 8], &default_battery(&line, 0), 0).map_err(e)?;
    match &v.witness {
        Some(Witness::Infeasible(c)) if v.outcome.fails() => ensure(check_infeasibility(&line, c).map_err(e)?, "certificate does not check")?,
        _ => return Err("specification at 0 lacks a certificate".into()),
    }
    Ok("mixing fails with escape at 1/2, 1, 2; shadowable at eps 1/10; specification fails at 0 with certificate".into())
}

fn criterion_4() -> Verdict {
    let sq = System::squaring();
    let k = Compact::Grid {
        lo: int(0),
        hi: int(1),
        points: 257,
    };
    let est = entropy_estimate(&sq, &k, &pointdyn::chaos::entropy::default_schedule(), 16, Maximality::GreedyMaximal).map_err(e)?;
    ensure(est.rate <= 0.02, format!("rate {}", est.rate))?;
    let one = PointValue::exact(int(1));
    let v = shadowable_point_verdict(&sq, &one, &rat(1, 10), &[rat(1, 20), rat(1, 40)], 4, 10, 0).map_err(e)?;
    ensure(v.outcome.holds(), "not shadowable at 1")?;
    let v = specification_point_verdict(&sq, &one, &rat(1, 10), &[1, 2, 4, 8], &default_battery(&sq, 0), 0).map_err(e)?;
    match &v.witness {
        Some(Witness::Infeasible(c)) if v.outcome.fails() => ensure(check_infeasibility(&sq, c).map_err(e)?, "certificate does not check")?,
        _ => return Err("specification at 1 lacks a certificate".into()),
    }
    let probes = default_probes(&sq, 0, 0).map_err(e)?;
    let v = mixing_point_verdict(&sq, &PointValue::exact(rat(1, 2)), &[rat(1, 8), rat(1, 16)], &probes, 16, 0).map_err(e)?;
    match &v.witness {
        Some(Witness::Escape(c)) if v.outcome.fails() => ensure(check_escape(&sq, c).map_err(e)?, "escape does not check")?,
        _ => return Err("mixing at 1/2 lacks a certificate".into()),
    }
    Ok(format!("rate {:.4} <= 0.02; shadowable at 1; specification fails at 1; mixing fails at 1/2", est.rate))
}

fn criterion_5() -> Verdict {
    let (tested, violations, _) = spec_implies_mixing(20, 10, &rat(1, 4), 6, 0).map_err(e)?;
    ensure(tested == 20, format!("only {tested} specification points found"))?;
    ensure(violations == 0, format!("{violations} violations"))?;
    Ok("20 specification points, all mixing on 10 probes".into())
}

fn criterion_6() -> Verdict {
    let pts = shift_points(20, 0).map_err(e)?;
    let periodic = pts.iter().filter(|p| p.as_biseq().and_then(|s| s.period()).is_some()).count();
    ensure(periodic > 0, "no periodic points among the seeds")?;
    let (total, failures, far) = deleted_ball_periodics(&pts, 6).map_err(e)?;
    ensure(failures == 0, format!("{failures} failures of {total}"))?;
    ensure(far > 0, "far-point branch never used")?;
    Ok(format!("{total} deleted balls, 0 failures, {periodic} periodic centres, far-point branch {far} times"))
}

fn criterion_7() -> Verdict {
    let mut notes = Vec::new();
    for system in [System::full_shift(2), System::doubling_circle()] {
        let (pairs, verified, inconclusive) = sensitivity_constructions(&system, 10, 0).map_err(e)?;
        ensure(verified == pairs, format!("{}: {verified}/{pairs} verified, {inconclusive} inconclusive", system.id()))?;
        notes.push(format!("{} {verified}/{pairs}", system.id()));
    }
    // Direct re-evaluation of one realized disjunct per system.
    for (system, x, q) in [
        (System::full_shift(2), "(011)(011)@0", "(1)(1)@0"),
        (System::doubling_circle(), "2/7", "0"),
    ] {
        let x: PointValue = x.parse().map_err(e)?;
        let q: PointValue = q.parse().map_err(e)?;
        let c = pointdyn::chaos::sensitivity_constant_from_periodic(&system, &x, &q, &pointdyn::Region::ball(x.clone(), int(1)), 64).map_err(e)?;
        ensure(c.eta.clone() * int(8) == c.delta, "eta != delta/8")?;
        let t = (c.p_period * c.j) as i64;
        let fx = system.iterate(&x, t).map_err(e)?;
        let d = match c.side {
            Disjunct::Periodic => system.distance(&system.iterate(&c.p, t).map_err(e)?, &fx).map_err(e)?,
            Disjunct::Neighbour => system.distance(&fx, &system.iterate(&c.y, t).map_err(e)?).map_err(e)?,
        };
        ensure(pointdyn::Real::Exact(c.eta.clone()).lt(&d), format!("{}: disjunct distance {d} <= eta", system.id()))?;
    }
    Ok(format!("eta = delta/8 re-verified: {}; no inconclusive on the shift", notes.join(", ")))
}

/// `y` equals `x` outside `[-l, l]` and reads the bits of `w` inside.
fn window_symbol(x: &BiSeq, w: u32, l: i64, j: i64) -> u8 {
    if j.abs() <= l {
        ((w >> (j + l)) & 1) as u8
    } else {
        x.at(j)
    }
}

fn criterion_8() -> Verdict {
    let shift = System::full_shift(2);
    let uniform = MeasureModel::uniform(2);
    let xs = shift_points(3, 8).map_err(e)?;
    let mut cases = 0;
    for x in &xs {
        let xb = x.as_biseq().unwrap();
        for delta in [rat(1, 2), rat(1, 4), rat(1, 8)] {
            for t in 0..=6i64 {
                let ball = gamma_ball(&shift, x, &delta, Window::TwoSided { horizon: t as u64 }, 0, 0).map_err(e)?;
                let BallRepr::Cylinder { cylinder, .. } = &ball.repr else {
                    return Err("shift ball is not a cylinder".into());
                };
                let pins = cylinder.constraints();
                // Brute force: every word on a window one wider than any disagreement that matters.
                let l = t + 3;
                for w in 0u32..1 << (2 * l + 1) {
                    let inside = (-t..=t).all(|i| {
                        let k = (0..=2 * l + 2).find(|&k| {
                            window_symbol(xb, w, l, i + k) != xb.at(i + k) || window_symbol(xb, w, l, i - k) != xb.at(i - k)
                        });
                        k.map_or(true, |k| pow2(-k) <= delta)
                    });
                    let pinned = pins.iter().all(|&(c, s)| window_symbol(xb, w, l, c) == s);
                    if inside != pinned {
                        return Err(format!("ball mismatch at delta {delta}, T {t}, word {w:b}"));
                    }
                }
                match measure_of_ball(&shift, &uniform, &ball).map_err(e)? {
                    MeasureValue::Exact { value } if value == pow2(-(cylinder.constrained_count() as i64)) => {}
                    other => return Err(format!("measure {other:?} for {} pins", cylinder.constrained_count())),
                }
                for m in [2, 3] {
                    let c = subgroup_containment(&shift, x, &delta, m, t as u64).map_err(e)?;
                    ensure(c.subgroup_inside_full && c.full_inside_subgroup, format!("containment m={m} T={t}"))?;
                }
                cases += 1;
            }
        }
    }
    let grid = default_delta_grid();
    let sat = System::default_satellite_extension();
    let p = PointValue::base_point(PointValue::BiSeq(BiSeq::periodic(&[0, 1])));
    let (d, v) = pointwise_expansivity_verdict(&sat, &p, &grid, 6, 16, 0).map_err(e)?;
    let e_witness = matches!(
        v.witness,
        Some(Witness::Point {
            point: PointValue::Satellite(SatellitePoint::Orbit { .. }),
            ..
        })
    );
    ensure(d.is_none() && v.outcome.fails() && e_witness, "satellite anchor not reported non-expansive with an E-point")?;
    for base in ["(0)(0)@0", "(1)(1)@0", "(0)1(0)@0", "(001)(001)@0"] {
        let y = PointValue::base_point(base.parse().map_err(e)?);
        let (d, v) = pointwise_expansivity_verdict(&sat, &y, &grid, 6, 16, 0).map_err(e)?;
        ensure(d.is_some() && v.outcome.holds(), format!("base point {base} not expansive"))?;
    }
    let (d, v) = pointwise_expansivity_verdict(&System::tanh_ladder(true), &PointValue::Ladder(LadderPoint::Upper), &grid, 3, 8, 0).map_err(e)?;
    ensure(d.is_none() && v.outcome.fails(), "ladder X reported expansive at a")?;
    for i in [-2i64, 0, 4] {
        let (d, v) = pointwise_expansivity_verdict(&System::tanh_ladder(false), &PointValue::Ladder(LadderPoint::Rung(i)), &grid, 3, 8, 0).map_err(e)?;
        ensure(d.is_some() && v.outcome.holds(), format!("ladder Y not expansive at x{i}"))?;
    }
    Ok(format!(
        "{cases} balls match the window oracle with measure 2^-pins and both subgroup inclusions; satellite and ladder verdicts as expected"
    ))
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).expect("readable directory") {
            let p = entry.expect("directory entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).expect("readable file"));
            }
        }
    }
    out
}

fn criterion_9() -> Verdict {
    let mut compared = 0;
    for name in [SuiteName::PaperExamples, SuiteName::Invariants, SuiteName::EntropyTable] {
        let mut runs = Vec::new();
        for k in 0..2 {
            let dir = scratch(&format!("suite-{}-{k}", name.id()));
            let out = bin().args(["suite", name.id(), "--seed", "7", "--out"]).arg(&dir).output().map_err(e)?;
            runs.push((out.stdout, files(&dir)));
        }
        ensure(runs[0] == runs[1], format!("suite {} differs between runs", name.id()))?;
        compared += runs[0].1.len();
    }
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut entries: Vec<PathBuf> = fs::read_dir(&configs).map_err(e)?.map(|d| d.unwrap().path()).collect();
    entries.sort();
    for cfg in entries.iter().filter(|p| p.extension().is_some_and(|x| x == "toml")) {
        let stem = cfg.file_stem().unwrap().to_string_lossy().to_string();
        let mut payloads = Vec::new();
        for k in 0..2 {
            let dir = scratch(&format!("run-{stem}-{k}"));
            bin().args(["run", "--seed", "7", "--config"]).arg(cfg).arg("--out").arg(&dir).output().map_err(e)?;
            payloads.push(fs::read(dir.join("result.json")).map_err(|err| format!("{stem}: {err}"))?);
        }
        ensure(payloads[0] == payloads[1], format!("run {stem} differs between runs"))?;
        compared += 1;
    }
    Ok(format!("{compared} payload files byte-identical across reruns"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("full 2-shift entropy by exact counting", criterion_1),
        ("entropy certificate from two specification points", criterion_2),
        ("doubling line fixture", criterion_3),
        ("squaring map fixture", criterion_4),
        ("specification points are mixing points", criterion_5),
        ("periodic points in deleted balls", criterion_6),
        ("sensitivity constant from a periodic orbit", criterion_7),
        ("expansivity suite", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {} PASS [{secs:.2}s] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL [{secs:.2}s] {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
