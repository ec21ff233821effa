use std::process::{Command, Output};

use serde_json::Value;

fn covsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covsense"))
        .args(args)
        .env_remove("COVSENSE_CONFIG")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

const EQ_BATH: [&str; 8] = ["--eta1", "0.5", "--eta2", "0.5", "--nb1", "1", "--nb2", "1"];

#[test]
fn scenario_golden_values() {
    let mut args = vec!["scenario"];
    args.extend(EQ_BATH);
    args.extend(["--epsilon", "1e-3", "--n", "1e6"]);
    let out = covsense(&args);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["c2"].as_f64().unwrap() - 1.8).abs() < 1e-7);
    let ns = v["ns"].as_f64().unwrap();
    assert!((ns - 2.98142e-6).abs() < 1e-11);
    assert_eq!(v["metadata"]["config"]["n"], 1_000_000);
    assert_eq!(v["metadata"]["constants"], "CODATA 2018");
    assert!(v["metadata"]["rng"].as_str().unwrap().contains("ChaCha8"));
}

#[test]
fn sweep_csv_contract() {
    let out = covsense(&[
        "sweep", "--L", "3e3", "--fmin", "15e12", "--fmax", "100e12", "--points", "200",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("f_hz,lambda_m,eta,nbar_b,c_ase,B"));
    let data: Vec<&str> = lines.clone().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 200);
    assert!(data.iter().all(|l| l.split(',').count() == 6));
    let meta = text
        .lines()
        .last()
        .unwrap()
        .strip_prefix("# metadata ")
        .unwrap();
    let meta: Value = serde_json::from_str(meta).unwrap();
    assert_eq!(meta["config"]["points"], 200);
}

#[test]
fn empty_sweep_prints_header_only() {
    let out = covsense(&[
        "sweep",
        "--L",
        "10",
        "--model",
        "far-field",
        "--points",
        "5",
    ]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "f_hz,lambda_m,eta,nbar_b,c_ase,B\n"
    );
    assert!(!out.stderr.is_empty());
}

#[test]
fn flagged_rows_have_blank_bounds() {
    let out = covsense(&[
        "sweep",
        "--L",
        "1e3",
        "--model",
        "far-field",
        "--fmin",
        "15e12",
        "--fmax",
        "100e12",
        "--points",
        "20",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect();
    assert!(rows.iter().any(|r| r.ends_with(",,")));
    assert!(rows.iter().any(|r| !r.ends_with(",,")));
}

#[test]
fn json_round_trips_bitwise() {
    let out = covsense(&["optimize", "--L", "1e3"]);
    let v = json(&out);
    let lambda = v["lambda_m"].as_f64().unwrap();
    let reprinted = serde_json::to_string(&v["lambda_m"]).unwrap();
    assert_eq!(
        reprinted.parse::<f64>().unwrap().to_bits(),
        lambda.to_bits()
    );

    let mut args = vec!["bounds"];
    args.extend(EQ_BATH);
    let v = json(&covsense(&args));
    let s = covsense::scenario::SensingScenario::symmetric(0.5, 1.0).unwrap();
    let rep = covsense::estimation::estimation_report(
        &s,
        &covsense::estimation::ReportInputs {
            epsilon: 1e-3,
            bandwidth_ase: 3e12,
            bandwidth_coh: 3e12,
            time: 1.0,
            nlo: 1e6,
        },
    )
    .unwrap();
    for (k, x) in [
        ("c2", rep.c2),
        ("c_ase", rep.c_ase),
        ("F_A", rep.f_a),
        ("mu_w", rep.mu_w),
        ("B", rep.b),
    ] {
        assert_eq!(v[k].as_f64().unwrap().to_bits(), x.to_bits(), "{k}");
    }
}

#[test]
fn exit_codes() {
    let domain = covsense(&[
        "scenario", "--eta1", "1.5", "--eta2", "0.5", "--nb1", "1", "--nb2", "1",
    ]);
    assert_eq!(domain.status.code(), Some(1));
    let err = json(&domain);
    assert_eq!(err["error"]["kind"], "domain");
    assert!(err["error"]["message"].is_string());

    assert_eq!(
        covsense(&["scenario", "--eta1", "0.5"]).status.code(),
        Some(2)
    );
    assert_eq!(covsense(&["sweep", "--bogus"]).status.code(), Some(2));
    assert_eq!(covsense(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(
        &path,
        "# equal baths\neta1 = 0.5\neta2 = 0.5\nnb1 = 1\nnb2 = 1\nepsilon = 1e-3\nn = 1e6\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();

    let from_file = covsense(&["scenario", "--config", p]);
    let mut args = vec!["scenario"];
    args.extend(EQ_BATH);
    args.extend(["--epsilon", "1e-3", "--n", "1e6"]);
    assert_eq!(from_file.stdout, covsense(&args).stdout);

    let over = json(&covsense(&["scenario", "--config", p, "--epsilon", "1e-2"]));
    assert_eq!(over["metadata"]["config"]["epsilon"], 0.01);

    let env = Command::new(env!("CARGO_BIN_EXE_covsense"))
        .arg("scenario")
        .env("COVSENSE_CONFIG", &path)
        .output()
        .unwrap();
    assert_eq!(env.stdout, from_file.stdout);

    std::fs::write(&path, "eta1 = 0.5\ntypo = 1\n").unwrap();
    assert_eq!(
        covsense(&["scenario", "--config", p]).status.code(),
        Some(2)
    );
}

#[test]
fn thread_count_does_not_change_output() {
    let mut args = vec!["mse-mc"];
    args.extend(EQ_BATH);
    args.extend([
        "--epsilon",
        "0.01",
        "--n",
        "1e8",
        "--trials",
        "5e4",
        "--seed",
        "9",
    ]);
    let base = covsense(&args).stdout;
    for t in ["1", "3"] {
        let mut a = vec!["--threads", t];
        a.extend(args.iter().copied());
        assert_eq!(covsense(&a).stdout, base);
    }
}
