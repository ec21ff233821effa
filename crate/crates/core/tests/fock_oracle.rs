mod common;

use covsense::estimation::gaussian_fidelity;
use covsense::fock::*;
use covsense::qre::{qre_gaussian, willie_qre};
use covsense::scenario::*;
use rand::Rng;

#[test]
fn willie_reference_point() {
    let s = SensingScenario::new(0.5, 0.5, 1.0, 1.0).unwrap();
    for ns in [0.01, 0.05] {
        let r0 = oracle_willie_state(&s, 0.0, 0.3, None).unwrap();
        let r1 = oracle_willie_state(&s, ns, 0.3, None).unwrap();
        let d = oracle_qre(&r0, &r1).unwrap();
        let g = qre_gaussian(
            &willie_cm(&s, 0.0, 0.3).unwrap(),
            &willie_cm(&s, ns, 0.3).unwrap(),
        )
        .unwrap()
        .d;
        assert!((d - g).abs() < 1e-4, "{d} vs {g}");
    }
}

#[test]
fn random_small_occupancy_draws() {
    let mut rng = common::rng(77);
    for _ in 0..4 {
        let s = common::random_scenario(&mut rng, 1.0);
        let ns = rng.random_range(1e-3..0.1);
        let theta = rng.random_range(-3.0..3.0);
        let r0 = oracle_willie_state(&s, 0.0, theta, None).unwrap();
        let r1 = oracle_willie_state(&s, ns, theta, None).unwrap();
        r1.validate().unwrap();
        let d = oracle_qre(&r0, &r1).unwrap();
        assert!((d - willie_qre(&s, ns, theta).unwrap()).abs() < 1e-4);

        let p0 = ProbeSettings::new(ns, rng.random_range(0.1..0.9), theta).unwrap();
        let p1 = ProbeSettings {
            theta: theta + 0.1,
            ..p0
        };
        let a0 = oracle_alice_state(&s, &p0, None).unwrap();
        let a1 = oracle_alice_state(&s, &p1, None).unwrap();
        let f = oracle_fidelity(&a0, &a1).unwrap();
        let g =
            gaussian_fidelity(&alice_cm(&s, &p0).unwrap(), &alice_cm(&s, &p1).unwrap()).unwrap();
        assert!((f - g).abs() < 1e-5, "{f} vs {g}");
        assert!((f - oracle_fidelity(&a1, &a0).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn oracle_identities() {
    let s = SensingScenario::new(0.3, 0.8, 0.5, 0.2).unwrap();
    let r = oracle_willie_state(&s, 0.05, 1.0, None).unwrap();
    assert!(oracle_qre(&r, &r).unwrap().abs() < 1e-10);
    assert!((oracle_fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-9);
    let v = r.covariance().unwrap();
    let u = covsense::gaussian::symplectic_spectrum(&v, None)
        .unwrap()
        .eigenvalues;
    assert!((r.purity() - 1.0 / (4.0 * u[0] * u[1])).abs() < 1e-6);
}

#[test]
fn small_dense_view() {
    let t = thermal_fock(0.0, 0)
        .unwrap()
        .tensor(&thermal_fock_auto(0.01, 1e-10).unwrap())
        .unwrap();
    let d = t.to_dense();
    let c = t.cutoff();
    assert_eq!(d.nrows(), (c + 1) * (c + 1));
    assert!((d.trace().re - t.trace()).abs() < 1e-15);
}
