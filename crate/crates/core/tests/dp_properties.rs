use proptest::prelude::*;
use randimpact::dp::Mode;
use randimpact::{
    evaluate_discrete, extract_schedule, solve, solve_selloff, ImpactKind, ImpactModel,
    MarketParams, NoiseModel, SolveSpec,
};

fn spec_strategy() -> impl Strategy<Value = SolveSpec> {
    (
        prop_oneof![Just(ImpactKind::Linear), Just(ImpactKind::Quadratic)],
        0.001f64..0.1,
        0.2f64..2.0,
        0.0f64..3.0,
        0.5f64..3.0,
        5u32..40,
        prop_oneof![Just(0.5), Just(1.0)],
        0.5f64..20.0,
        20usize..120,
    )
        .prop_map(|(kind, alpha0, gamma, alpha1, beta1, n, t, phi_max, m)| {
            SolveSpec::new(
                MarketParams::from_mu_tilde(0.05, 0.1, 1.0).unwrap(),
                ImpactModel::new(kind, alpha0).unwrap(),
                NoiseModel::new(gamma, alpha1, beta1).unwrap(),
                n,
                t,
                phi_max,
                m,
                Mode::RandomImpact,
            )
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn value_is_bounded_monotone_and_grows_with_time(spec in spec_strategy()) {
        let s = solve(&spec).unwrap();
        let disc = spec.discount();
        for j in 0..=s.steps() {
            let layer = s.layer(j);
            prop_assert_eq!(layer[0], 0.0);
            for i in 0..layer.len() {
                prop_assert!(layer[i] <= s.phi(i) * (1.0 + 1e-12));
                if i > 0 {
                    prop_assert!(layer[i] >= layer[i - 1]);
                }
                if j > 0 {
                    prop_assert!(layer[i] >= disc * s.value(j - 1, i));
                }
            }
        }
    }

    #[test]
    fn extracted_policy_is_admissible_and_attains_value(spec in spec_strategy(), frac in 0.05f64..1.0) {
        let s = solve(&spec).unwrap();
        let phi0 = s.phi(s.node_at(spec.phi_max * frac));
        let sched = extract_schedule(&s, phi0).unwrap();
        prop_assert_eq!(sched.len(), spec.steps());
        prop_assert!(sched.blocks().iter().all(|&b| b >= 0.0));
        prop_assert!(sched.total() <= phi0 * (1.0 + 1e-12));
        let v = evaluate_discrete(&sched, &spec).unwrap();
        let dp = s.normalized_value(phi0);
        prop_assert!((v - dp).abs() <= 1e-12 * dp.max(1e-300), "{} vs {}", v, dp);
    }

    #[test]
    fn random_impact_dominates_mean_field_baseline(spec in spec_strategy()) {
        let r = solve(&spec).unwrap();
        let b = solve(&spec.with_mode(Mode::DeterministicBaseline)).unwrap();
        for j in 0..=r.steps() {
            for (x, y) in r.layer(j).iter().zip(b.layer(j)) {
                prop_assert!(x >= y);
            }
        }
    }

    #[test]
    fn sell_off_is_constrained_and_liquidates(spec in spec_strategy()) {
        prop_assume!(spec.steps() >= 1);
        let free = solve(&spec).unwrap();
        let so = solve_selloff(&spec).unwrap();
        for j in 1..=free.steps() {
            for (x, y) in so.layer(j).iter().zip(free.layer(j)) {
                prop_assert!(x <= y);
            }
        }
        let sched = extract_schedule(&so, spec.phi_max).unwrap();
        prop_assert!(sched.remaining().abs() <= 1e-9 * spec.phi_max);
    }
}
