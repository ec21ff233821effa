mod common;

use covsense::error::Error;
use covsense::qre::*;
use covsense::scenario::SensingScenario;
use proptest::prelude::*;

#[test]
fn equal_bath_grid() {
    for i in 1..=9 {
        let eta_eff = i as f64 / 10.0;
        for nb in [0.01, 0.1, 1.0, 10.0] {
            let s = SensingScenario::symmetric(eta_eff.sqrt(), nb).unwrap();
            let c2 = taylor_c2(&s).unwrap();
            let exact = equal_bath_c2(eta_eff, nb).unwrap();
            assert!(((c2 - exact) / exact).abs() < 1e-6, "{eta_eff} {nb}");
            for ns in [1e-4, 1e-2, 0.1] {
                let d = willie_qre(&s, ns, 0.0).unwrap();
                let e = equal_bath_qre(eta_eff, nb, ns).unwrap();
                assert!((d - e).abs() < 1e-10, "{eta_eff} {nb} {ns}");
            }
        }
    }
}

#[test]
fn budget_saturates_target() {
    let s = SensingScenario::new(0.4, 0.7, 0.5, 2.0).unwrap();
    for eps in [0.1, 0.01, 1e-3] {
        for n in [10_000u64, 100_000_000, 3_000_000_000_000] {
            let b = covert_budget(&s, eps, n).unwrap();
            assert!((b.willie_error_lb - (0.5 - eps)).abs() < 1e-12);
        }
    }
}

#[test]
fn degenerate_channels_flagged() {
    let s = SensingScenario::new(1.0, 1.0, 0.3, 0.3).unwrap();
    assert!(matches!(
        covert_budget(&s, 0.01, 1000),
        Err(Error::DegenerateCovertness(_))
    ));
}

#[test]
fn faint_background_budget_scale() {
    let s = SensingScenario::symmetric(0.8, 1e-5).unwrap();
    let c2 = taylor_c2(&s).unwrap();
    let exact = equal_bath_c2(0.64, 1e-5).unwrap();
    assert!(((c2 - exact) / exact).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qre_increases_with_signal(seed in any::<u64>(), a in 1e-4f64..0.5, b in 1e-4f64..0.5) {
        let mut rng = common::rng(seed);
        let s = common::random_scenario(&mut rng, 3.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let dl = willie_qre(&s, lo, 0.3).unwrap();
        let dh = willie_qre(&s, hi, 0.3).unwrap();
        prop_assert!(dl >= 0.0 && dh >= dl);
    }

    #[test]
    fn qre_independent_of_phase(seed in any::<u64>(), theta in -4.0f64..4.0) {
        let mut rng = common::rng(seed);
        let s = common::random_scenario(&mut rng, 3.0);
        let d0 = willie_qre(&s, 0.05, 0.0).unwrap();
        prop_assert!((willie_qre(&s, 0.05, theta).unwrap() - d0).abs() < 1e-13);
    }

    #[test]
    fn second_order_dominates(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let s = common::random_scenario(&mut rng, 3.0);
        let c2 = taylor_c2(&s).unwrap();
        let ns = 1e-3 * signal_margin(&s).unwrap();
        let d = willie_qre(&s, ns, 0.0).unwrap();
        prop_assert!((d / (0.5 * c2 * ns * ns) - 1.0).abs() < 0.01);
    }

    #[test]
    fn budget_scales_inverse_root_n(seed in any::<u64>(), eps in 1e-3f64..0.4) {
        let mut rng = common::rng(seed);
        let s = common::random_scenario(&mut rng, 3.0);
        let b1 = covert_budget(&s, eps, 1_000_000).unwrap();
        let b4 = covert_budget(&s, eps, 4_000_000).unwrap();
        prop_assert!((b1.ns / b4.ns - 2.0).abs() < 1e-12);
    }
}
