use proptest::prelude::*;

use stochastic_hawkes::diagnostics::rescaled_gaps;
use stochastic_hawkes::infer::{
    branching_probabilities, gibbs_sample_z, Hyperparams, Init, McmcConfig, Sampler,
};
use stochastic_hawkes::{
    compensator_at_events, integrated_intensity, intensities_at_events, intensity_at, simulate,
    ContagionPath, EventSequence, HawkesParams, ModelKind, Parent, SdeKind, SdeSpec, SeedTree,
};

/// Sorted event times on `[0, horizon]` with matching positive levels.
fn instance(max_len: usize) -> impl Strategy<Value = (EventSequence, ContagionPath, HawkesParams)> {
    (1..=max_len, 1.0..50.0f64).prop_flat_map(|(n, horizon)| {
        (
            prop::collection::vec(0.0..horizon, n),
            prop::collection::vec(0.01..3.0f64, n),
            (0.05..3.0f64, 0.05..3.0f64, 0.1..4.0f64),
            Just(horizon),
        )
            .prop_map(|(mut times, levels, (a, lambda0, delta), horizon)| {
                times.sort_by(f64::total_cmp);
                times.dedup();
                let n = times.len();
                (
                    EventSequence::new(times, horizon).unwrap(),
                    ContagionPath::new(levels[..n].to_vec()).unwrap(),
                    HawkesParams::new(a, lambda0, delta).unwrap(),
                )
            })
    })
}

fn any_spec() -> impl Strategy<Value = SdeSpec> {
    prop_oneof![
        (0.1..1.5f64).prop_map(|psi| SdeKind::Constant { psi }),
        (0.5..4.0f64, 1.0..6.0f64).prop_map(|(shape, rate)| SdeKind::IidGamma { shape, rate }),
        (-0.05..0.0f64, 0.001..0.05f64).prop_map(|(mu, sigma2)| SdeKind::Gbm { mu, sigma2 }),
        (0.5..3.0f64, -1.5..-0.5f64, 0.01..0.5f64)
            .prop_map(|(k, mu, sigma2)| SdeKind::ExpLangevin { k, mu, sigma2 }),
    ]
    .prop_map(|kind| SdeSpec::new(kind, 0.5).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn branching_rows_are_distributions((events, y, params) in instance(40)) {
        let times = events.times();
        for i in 0..events.len() {
            let row = branching_probabilities(i, &events, &y, &params).unwrap();
            prop_assert_eq!(row.len(), i + 1);
            prop_assert!(row.iter().all(|&p| p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);

            // Independent evaluation: unnormalised weights, then divide.
            let base = params.a + (params.lambda0 - params.a) * (-params.delta * times[i]).exp();
            let mut w = vec![base];
            for j in 0..i {
                w.push(y.levels()[j] * (params.delta * (times[j] - times[i])).exp());
            }
            let total: f64 = w.iter().sum();
            for (p, wj) in row.iter().zip(&w) {
                prop_assert!((p - wj / total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampled_parents_precede_their_children((events, y, params) in instance(40), seed in any::<u64>()) {
        let mut rng = SeedTree::new(seed).stream(0);
        let z = gibbs_sample_z(&events, &y, &params, &mut rng).unwrap();
        prop_assert_eq!(z.parents()[0], Parent::Immigrant);
        for (i, p) in z.parents().iter().enumerate() {
            if let Parent::Event(j) = p {
                prop_assert!(*j < i);
            }
        }
    }

    #[test]
    fn recursions_match_direct_sums((events, y, params) in instance(60)) {
        let lambdas = intensities_at_events(&events, &y, &params).unwrap();
        let comp = compensator_at_events(&events, &y, &params).unwrap();
        for (i, &t) in events.times().iter().enumerate() {
            let direct = intensity_at(t, &events, &y, &params).unwrap();
            prop_assert!(close(lambdas[i], direct, 1e-10), "{} vs {}", lambdas[i], direct);
            let direct = integrated_intensity(t, &events, &y, &params).unwrap();
            prop_assert!(close(comp[i], direct, 1e-10), "{} vs {}", comp[i], direct);
        }
    }

    #[test]
    fn jumps_equal_levels_and_compensator_grows((events, y, params) in instance(20), u in 0.0..1.0f64) {
        let eps = 1e-9;
        for (&t, &level) in events.times().iter().zip(y.levels()) {
            let left = intensity_at(t, &events, &y, &params).unwrap();
            let right = intensity_at(t + eps, &events, &y, &params).unwrap();
            prop_assert!((right - left - level).abs() < 1e-6 * (1.0 + left));
        }
        let t1 = u * events.horizon();
        let before = integrated_intensity(t1, &events, &y, &params).unwrap();
        let after = integrated_intensity(events.horizon(), &events, &y, &params).unwrap();
        prop_assert!(after >= before);
    }

    /// With a flat base rate, moving the whole record later only lengthens
    /// the first rescaled gap; every other gap is untouched.
    #[test]
    fn rescaling_is_shift_invariant_after_the_first_gap(
        (events, y, params) in instance(40),
        offset in 0.0..20.0f64,
    ) {
        let flat = HawkesParams { lambda0: params.a, ..params };
        let moved = events.shifted(offset).unwrap();
        let g = rescaled_gaps(&events, &y, &flat).unwrap();
        let h = rescaled_gaps(&moved, &y, &flat).unwrap();
        prop_assert!(close(h[0], g[0] + flat.a * offset, 1e-9));
        for (a, b) in g.iter().zip(&h).skip(1) {
            prop_assert!(close(*a, *b, 1e-8), "{} vs {}", a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn simulated_paths_are_valid_and_reproducible(
        spec in any_spec(),
        (a, lambda0, delta) in (0.2..2.0f64, 0.2..3.0f64, 2.0..5.0f64),
        horizon in 0.0..60.0f64,
        seed in any::<u64>(),
    ) {
        let params = HawkesParams::new(a, lambda0, delta).unwrap();
        let run = simulate(&params, &spec, horizon, &mut SeedTree::new(seed).stream(0)).unwrap();
        let times = run.events.times();
        prop_assert!(times.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(times.iter().all(|&t| t > 0.0 && t <= horizon));
        prop_assert_eq!(run.contagion.len(), times.len());
        prop_assert!(run.contagion.levels().iter().all(|&v| v > 0.0 && v.is_finite()));
        let again = simulate(&params, &spec, horizon, &mut SeedTree::new(seed).stream(0)).unwrap();
        prop_assert_eq!(run.events, again.events);
        prop_assert_eq!(run.contagion, again.contagion);
    }

    #[test]
    fn chain_states_stay_valid(
        (events, _, _) in instance(25),
        kind in prop_oneof![
            Just(ModelKind::Constant),
            Just(ModelKind::IidGamma),
            Just(ModelKind::Gbm),
            Just(ModelKind::ExpLangevin),
        ],
        seed in any::<u64>(),
    ) {
        let config = McmcConfig {
            iterations: 60,
            burn_in: 20,
            seed,
            init: Init::Prior,
            save_latent: true,
            ..McmcConfig::default()
        };
        let chain = Sampler::new(events.clone(), kind, Hyperparams::default(), config)
            .unwrap()
            .run()
            .unwrap();
        prop_assert_eq!(chain.draws.len(), 40);
        prop_assert_eq!(chain.y_mean.len(), events.len());
        for d in &chain.draws {
            prop_assert!(d.log_likelihood.is_finite());
            prop_assert!(d.params.validate().is_ok());
            prop_assert!(d.spec.validate().is_ok());
            prop_assert!(d.values().iter().all(|v| v.is_finite()));
            let (y, z) = d.latent.as_ref().unwrap();
            prop_assert!(y.levels().iter().all(|&v| v > 0.0 && v.is_finite()));
            for (i, p) in z.parents().iter().enumerate() {
                if let Parent::Event(j) = p {
                    prop_assert!(*j < i);
                }
            }
        }
    }
}
