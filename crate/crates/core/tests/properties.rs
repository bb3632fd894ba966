use pointdyn::chaos::{
    check_sensitivity_construction, entropy_certificate_from_spec_points, entropy_estimate, periodic_in_deleted_ball, sensitivity_constant_from_periodic,
    separated_set, verify_entropy_certificate, Compact, Maximality,
};
use pointdyn::real::{int, pow2, rat};
use pointdyn::shadowing::{
    default_battery, mixing_point_verdict, specification_point_verdict, specification_trace_symbolic, target_error, Segment, SpecSegments,
};
use pointdyn::symbolic::BiSeq;
use pointdyn::{PointValue, Rational, Region, System};
use proptest::prelude::*;

fn word(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 1..=max_len)
}

fn biseq() -> impl Strategy<Value = PointValue> {
    (word(3), prop::collection::vec(0u8..2, 0..6), word(3), -4i64..4)
        .prop_map(|(l, c, r, o)| PointValue::BiSeq(BiSeq::new(l, c, r, o).unwrap()))
}

fn small_eps() -> impl Strategy<Value = Rational> {
    (1i64..40).prop_map(|k| rat(1, k + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn separated_sets_revalidate(eps in small_eps(), n in 1u64..4, points in 3usize..24) {
        for system in [System::identity(), System::tent(), System::doubling_circle()] {
            let k = Compact::Grid { lo: int(0), hi: rat(99, 100), points };
            let g = separated_set(&system, &k, n, &eps, Maximality::GreedyMaximal).unwrap();
            let e = separated_set(&system, &k, n, &eps, Maximality::ExactMaximum).unwrap();
            prop_assert!(g.verify(&system).unwrap());
            prop_assert!(e.verify(&system).unwrap());
            prop_assert!(g.points.len() <= e.points.len());
        }
    }

    #[test]
    fn counts_grow_as_eps_shrinks(n in 1u64..6, start in 1i64..4) {
        let shift = System::full_shift(2);
        let schedule: Vec<Rational> = (start..start + 3).map(|k| pow2(-k)).collect();
        let est = entropy_estimate(&shift, &Compact::Words {}, &schedule, n.max(2), Maximality::ExactMaximum).unwrap();
        for m in 1..=n.max(2) {
            let col: Vec<u64> = est.rows.iter().filter(|r| r.n == m).map(|r| r.count).collect();
            prop_assert!(col.windows(2).all(|w| w[0] <= w[1]));
        }
        prop_assert!(est.rows.iter().all(|r| r.rate >= 0.0));
    }

    #[test]
    fn symbolic_tracers_meet_their_targets(
        xs in prop::collection::vec(biseq(), 1..4),
        lens in prop::collection::vec(0u64..4, 3),
        gap in 4u64..9,
        k in 1i64..4,
    ) {
        let shift = System::full_shift(2);
        let eps = pow2(-k);
        let mut a = 0;
        let segments: Vec<Segment> = xs.iter().zip(&lens).map(|(x, l)| {
            let s = Segment { a, b: a + l, x: x.clone() };
            a += l + gap;
            s
        }).collect();
        let spec = SpecSegments { segments, gap, epsilon: eps.clone() };
        if let Ok(r) = specification_trace_symbolic(&shift, &spec, false) {
            let err = target_error(&shift, &r.tracer, &spec.targets(&shift).unwrap()).unwrap();
            prop_assert!(err.lt(&pointdyn::Real::Exact(eps.clone())));
        }
        if let Ok(r) = specification_trace_symbolic(&shift, &spec, true) {
            let err = target_error(&shift, &r.tracer, &spec.targets(&shift).unwrap()).unwrap();
            prop_assert!(err.lt(&pointdyn::Real::Exact(eps)));
            let p = r.period.unwrap() as i64;
            prop_assert_eq!(shift.iterate(&r.tracer, p).unwrap(), r.tracer);
        }
    }

    #[test]
    fn periodic_points_sit_in_deleted_balls(x in biseq(), k in 1i64..7) {
        let shift = System::full_shift(2);
        let r = pow2(-k);
        let w = periodic_in_deleted_ball(&shift, &x, &r, 64).unwrap().unwrap();
        prop_assert!(w.point != x);
        let d = shift.distance(&x, &w.point).unwrap();
        prop_assert!(d.lt(&pointdyn::Real::Exact(r)));
        prop_assert_eq!(shift.iterate(&w.point, w.period as i64).unwrap(), w.point);
    }

    #[test]
    fn sensitivity_construction_revalidates(x in biseq(), q in word(3)) {
        let shift = System::full_shift(2);
        let q = PointValue::BiSeq(BiSeq::periodic(&q));
        let n = Region::ball(x.clone(), int(1));
        if let Ok(c) = sensitivity_constant_from_periodic(&shift, &x, &q, &n, 64) {
            prop_assert_eq!(&c.eta * int(8), c.delta.clone());
            prop_assert!(check_sensitivity_construction(&shift, &c).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn specification_points_are_mixing(x in biseq(), seed in 0u64..1000) {
        let shift = System::full_shift(2);
        let battery = default_battery(&shift, seed);
        let spec = specification_point_verdict(&shift, &x, &rat(1, 4), &[6], &battery, seed).unwrap();
        if spec.outcome.holds() {
            let probes: Vec<Region> = (0..4u8).map(|i| Region::cylinder(i as i64 - 2, vec![i % 2, 1 - i % 2])).collect();
            let mix = mixing_point_verdict(&shift, &x, &[pow2(-1), pow2(-3)], &probes, 32, seed).unwrap();
            prop_assert!(mix.outcome.holds(), "{}", mix.to_json());
        }
    }
}

#[test]
fn certificate_bound_stays_below_the_rate() {
    let shift = System::full_shift(2);
    let est = entropy_estimate(&shift, &Compact::Words {}, &[rat(1, 2)], 8, Maximality::ExactMaximum).unwrap();
    let x: PointValue = "(0)(0)@0".parse().unwrap();
    let y: PointValue = "(1)(1)@0".parse().unwrap();
    for m in [4, 5, 6] {
        for n in [1, 3, 5] {
            let cert = entropy_certificate_from_spec_points(&shift, &x, &y, &rat(3, 10), m, n, 0).unwrap();
            assert!(verify_entropy_certificate(&cert).unwrap().is_empty());
            assert!(cert.bound <= est.rate + est.residual);
        }
    }
}
