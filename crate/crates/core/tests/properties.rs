use proptest::prelude::*;
use stickyflow::cone::{
    cone_certificates, is_confinement_consistent, project_monotone, project_monotone_via_envelope,
};
use stickyflow::engine::{next_event, simulate, Cluster};
use stickyflow::lagrangian::{confinement_equivalence, LagrangianSolution};
use stickyflow::quantile::{
    l2_dist, measure_of_quantile, quantile_of, wasserstein2, DiscreteMeasure, PointMass,
    StepFunction,
};
use stickyflow::scenario::{self, convert};
use stickyflow::{Domain, ParticleState, Rational, Scalar};

fn cells() -> impl Strategy<Value = StepFunction<f64>> {
    prop::collection::vec((1u32..64, -512i32..=512), 1..12).prop_map(|cells| {
        let total: u32 = cells.iter().map(|c| c.0).sum();
        let widths: Vec<f64> = cells.iter().map(|c| f64::from(c.0) / f64::from(total)).collect();
        let values = cells.iter().map(|c| f64::from(c.1) / 64.0).collect();
        StepFunction::from_widths(&widths, values).unwrap()
    })
}

fn measure() -> impl Strategy<Value = DiscreteMeasure<f64>> {
    prop::collection::vec((1u32..32, -256i32..=256), 1..10).prop_map(|pts| {
        let total: u32 = pts.iter().map(|p| p.0).sum();
        DiscreteMeasure::new(
            pts.iter()
                .map(|p| PointMass::new(f64::from(p.0) / f64::from(total), f64::from(p.1) / 64.0))
                .collect(),
        )
        .unwrap()
    })
}

fn free_state() -> impl Strategy<Value = ParticleState<f64>> {
    (any::<u64>(), 1usize..=12).prop_map(|(seed, n)| scenario::random_free_line(&mut scenario::rng(seed), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quantile_round_trip(mu in measure()) {
        let back = measure_of_quantile(&quantile_of(&mu)).unwrap();
        prop_assert!(back.approx_eq(&mu, 1e-12));
    }

    #[test]
    fn wasserstein_is_a_metric(a in measure(), b in measure(), c in measure()) {
        prop_assert!(wasserstein2(&a, &a) == 0.0);
        prop_assert!((wasserstein2(&a, &b) - wasserstein2(&b, &a)).abs() < 1e-12);
        prop_assert!(wasserstein2(&a, &c) <= wasserstein2(&a, &b) + wasserstein2(&b, &c) + 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_monotone(f in cells()) {
        let p = project_monotone(&f).projection;
        prop_assert!(p.is_nondecreasing(0.0));
        prop_assert!(project_monotone(&p).projection.approx_eq(&p, 1e-12));
        prop_assert!((p.integral() - f.integral()).abs() < 1e-12);
    }

    #[test]
    fn projection_routes_agree(f in cells()) {
        let a = project_monotone(&f).projection;
        let b = project_monotone_via_envelope(&f);
        prop_assert!(l2_dist(&a, &b) < 1e-10);
    }

    #[test]
    fn projection_routes_agree_exactly(f in cells()) {
        let exact = StepFunction::<Rational>::new(
            f.breaks().iter().map(|b| Rational::from_f64(*b)).collect(),
            f.values().iter().map(|v| Rational::from_f64(*v)).collect(),
        ).unwrap();
        prop_assert!(project_monotone(&exact).projection.approx_eq(&project_monotone_via_envelope(&exact), 0.0));
    }

    #[test]
    fn projection_is_a_contraction(f in cells(), g in cells()) {
        let (pf, pg) = (project_monotone(&f).projection, project_monotone(&g).projection);
        prop_assert!(l2_dist(&pf, &pg) <= l2_dist(&f, &g) + 1e-12);
    }

    #[test]
    fn projection_commutes_with_scaling_and_shifts(f in cells(), c in 1u32..16, s in -8i32..8) {
        let c = f64::from(c) / 4.0;
        let s = f64::from(s) / 4.0;
        let p = project_monotone(&f).projection;
        let scaled = project_monotone(&f.scale(&c)).projection;
        prop_assert!(scaled.approx_eq(&p.scale(&c), 1e-12));
        let shifted = project_monotone(&f.map(|v| v + s)).projection;
        prop_assert!(shifted.approx_eq(&p.map(|v| v + s), 1e-12));
    }

    #[test]
    fn certificates_hold(f in cells(), seed in any::<u64>()) {
        let r = project_monotone(&f);
        prop_assert!(cone_certificates(&f, &r, seed).passes);
    }

    #[test]
    fn confinement_routes_agree(f in cells()) {
        prop_assert!(is_confinement_consistent(&f).routes_agree());
    }

    #[test]
    fn engine_conserves_mass_and_momentum(s in free_state()) {
        let log = simulate(&s, &Domain::line(), None).unwrap();
        prop_assert!(log.events.len() < s.len().max(1));
        let end = log.last_event_time() + 1.0;
        let mut energy = f64::INFINITY;
        for k in 0..=16 {
            let t = end * f64::from(k) / 16.0;
            let st = log.state_at(&t).unwrap();
            prop_assert!((st.total_mass() - 1.0).abs() < 1e-12);
            prop_assert!((st.momentum() - s.momentum()).abs() < 1e-12);
            prop_assert!(st.kinetic_energy() <= energy + 1e-12);
            energy = st.kinetic_energy();
            let xs = log.atom_positions_at(&t).unwrap();
            prop_assert!(xs.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        }
    }

    #[test]
    fn first_event_matches_direct_scan(s in free_state()) {
        let log = simulate(&s, &Domain::line(), None).unwrap();
        let clusters: Vec<Cluster<f64>> = s.atoms().iter().enumerate()
            .map(|(i, a)| Cluster::from_atom(i, a, 0))
            .collect();
        match (next_event(&clusters, &Domain::line(), &0.0), log.events.first()) {
            (None, None) => {}
            (Some(direct), Some(logged)) => {
                prop_assert!((direct.time - logged.time).abs() < 1e-12);
                prop_assert!((direct.position - logged.position).abs() < 1e-12);
            }
            (a, b) => prop_assert!(false, "direct {:?} vs logged {:?}", a.map(|e| e.time), b.map(|e| e.time)),
        }
    }

    #[test]
    fn flow_restarts_consistently(s in free_state(), a in 0u32..64, b in 0u32..64) {
        // solving to t and then for dt more equals solving to t + dt
        let (t, dt) = (f64::from(a) / 64.0, f64::from(b) / 64.0);
        let log = simulate(&s, &Domain::line(), None).unwrap();
        let restarted = LagrangianSolution::from_state(&log.state_at(&t).unwrap()).unwrap();
        let direct = LagrangianSolution::from_state(&s).unwrap();
        let x = restarted.solve_quantile(&dt).unwrap();
        let y = direct.solve_quantile(&(t + dt)).unwrap();
        prop_assert!(l2_dist(&x, &y) < 1e-10);
    }

    #[test]
    fn float_and_rational_engines_agree(s in free_state()) {
        let exact: ParticleState<Rational> = convert(&s);
        let fl = simulate(&s, &Domain::line(), None).unwrap();
        let ex = simulate(&exact, &Domain::line(), None).unwrap();
        prop_assert_eq!(fl.events.len(), ex.events.len());
        for (a, b) in fl.events.iter().zip(&ex.events) {
            prop_assert!((a.time - b.time.to_f64()).abs() < 1e-10);
        }
    }

    #[test]
    fn rational_confinement_equivalence(seed in any::<u64>(), n in 1usize..=8) {
        let s: ParticleState<Rational> = convert(&scenario::random_box(&mut scenario::rng(seed), n));
        let rep = confinement_equivalence(&s, &Domain::unit_interval(), 16).unwrap();
        prop_assert!(rep.passes && rep.max_w2 == 0.0);
    }
}
