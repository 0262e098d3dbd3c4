use proptest::prelude::*;

use mqkd::decoy::{binary_entropy, decoy_breakdown, key_bits_per_pulse, DecoyInputs};
use mqkd::mac::{binomial_weight, evaluate, rate_tdma, SchemeSpec};
use mqkd::mc::{compare, simulate_interferers, simulate_lbs_sensing, McConfig, McMode};
use mqkd::network::link_transmissivity;
use mqkd::SystemParams;

fn scheme() -> impl Strategy<Value = SchemeSpec> {
    prop_oneof![
        Just(SchemeSpec::tdma()),
        (1usize..=4).prop_map(SchemeSpec::cdma),
        (0u64..5000).prop_map(SchemeSpec::lbs),
    ]
}

proptest! {
    #[test]
    fn entropy_bounded_and_peaks_at_half(p in 0.0f64..=1.0) {
        let h = binary_entropy(p).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!(h <= binary_entropy(0.5).unwrap());
    }

    #[test]
    fn entropy_rejects_non_probabilities(p in prop_oneof![-10.0f64..-1e-9, 1.0 + 1e-9..10.0]) {
        prop_assert!(binary_entropy(p).is_err());
    }

    #[test]
    fn key_rate_does_not_grow_with_background(
        mu in 0.1f64..1.0,
        eta in 1e-4f64..0.1,
        y0 in 1e-7f64..1e-3,
        factor in 1.0f64..10.0,
    ) {
        let at = |y0| key_bits_per_pulse(&DecoyInputs { mu, eta, y0, e_d: 0.033, e0: 0.5, f_ec: 1.22 }).unwrap();
        prop_assert!(at(y0 * factor) <= at(y0));
    }

    #[test]
    fn breakdown_quantities_are_probabilities(
        mu in 0.01f64..2.0,
        eta in 1e-6f64..1.0,
        y0 in 0.0f64..0.5,
        e_d in 0.0f64..=0.5,
    ) {
        let b = decoy_breakdown(&DecoyInputs { mu, eta, y0, e_d, e0: 0.5, f_ec: 1.22 }).unwrap();
        for v in [b.q_mu, b.e_mu, b.q1, b.e1, b.y1] {
            prop_assert!((0.0..=1.0).contains(&v), "{b:?}");
        }
        prop_assert!(b.q1 <= b.q_mu + 1e-15);
    }

    #[test]
    fn binomial_sums_to_one(n in 0usize..200, p in 0.0f64..=1.0) {
        let s: f64 = (0..=n).map(|m| binomial_weight(m, n, p).unwrap()).sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn no_scheme_beats_tdma(
        s in scheme(),
        loss in 0.0f64..30.0,
        n in 2usize..=16,
    ) {
        let p = SystemParams { path_loss_db: loss, ..SystemParams::table_one() };
        let r = evaluate(&p, &s, n, true).unwrap();
        let tdma = rate_tdma(&p, n).unwrap();
        prop_assert!(r.per_user_rate >= 0.0);
        prop_assert!(r.per_user_rate <= tdma.per_user_rate * (1.0 + 1e-12), "{s}: {} > {}", r.per_user_rate, tdma.per_user_rate);
        prop_assert!((r.total_rate - r.per_user_rate * n as f64).abs() <= 1e-9 * r.total_rate.max(1.0));
    }

    #[test]
    fn transmissivity_falls_with_loss(a in 0.0f64..50.0, d in 0.01f64..10.0) {
        let at = |db| link_transmissivity(&SystemParams { path_loss_db: db, ..SystemParams::table_one() });
        prop_assert!(at(a + d) < at(a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn monte_carlo_is_reproducible_and_order_free(seed in any::<u64>(), w in 1usize..=3) {
        let mut cfg = McConfig::new(SystemParams::table_one(), SchemeSpec::cdma(w), 16, 2_000, seed);
        let serial = simulate_interferers(&cfg).unwrap();
        prop_assert_eq!(&serial, &simulate_interferers(&cfg).unwrap());
        cfg.parallel = true;
        prop_assert_eq!(&serial, &simulate_interferers(&cfg).unwrap());
        prop_assert_eq!(serial.interferer_histogram.iter().sum::<u64>(), 2_000);
    }

    #[test]
    fn lbs_sensing_is_reproducible(seed in any::<u64>(), k in 0u64..2000) {
        let mut cfg = McConfig::new(SystemParams::table_one(), SchemeSpec::lbs(k), 16, 500, seed);
        let serial = simulate_lbs_sensing(&cfg).unwrap();
        cfg.parallel = true;
        prop_assert_eq!(serial, simulate_lbs_sensing(&cfg).unwrap());
    }
}

#[test]
fn code_level_collisions_do_not_exceed_the_bernoulli_model() {
    for w in [2usize, 3] {
        let n_active = if w == 2 { 7 } else { 2 };
        let mut cfg = McConfig::new(SystemParams::table_one(), SchemeSpec::cdma(w), n_active, 200_000, 7);
        cfg.parallel = true;
        let bern = simulate_interferers(&cfg).unwrap();
        cfg.mode = McMode::CodeLevel;
        let code = simulate_interferers(&cfg).unwrap();
        let p = compare(&cfg, &code).unwrap().model_probability;
        let draws = (200_000 * (n_active - 1)) as f64;
        // both runs are noisy; 5 single-run standard errors covers the difference
        let se = (p * (1.0 - p) / draws).sqrt();
        assert!(
            code.collision_freq <= bern.collision_freq + 5.0 * se,
            "w={w}: code-level {} vs bernoulli {}",
            code.collision_freq,
            bern.collision_freq
        );
    }
}
