use clap::{Args, ValueEnum};
use covsense::error::Error;
use covsense::estimation::{estimation_report, gaussian_fidelity, ReportInputs};
use covsense::fock::{
    oracle_alice_state, oracle_fidelity, oracle_qre, oracle_willie_state, DEFAULT_TAIL_BOUND,
};
use covsense::gaussian::CovarianceMatrix;
use covsense::link::{
    c_ase_at, convention_sweep, minimum_check, optimize_wavelength, sweep_frequency, BoundSettings,
    EtaPolicy, LinkGeometry, TransmissivityModel, DEFAULT_BRACKET, PLOT_BAND_HZ, PLOT_POINTS,
    PUBLISHED_TARGETS, SWEEP_CLAMP,
};
use covsense::montecarlo::{exact_estimator_mse, simulate_heterodyne_mse_with, NoiseModel};
use covsense::qre::{covert_budget, modes_from_bandwidth, taylor_c3, willie_qre};
use covsense::scenario::{alice_cm, willie_cm, ProbeSettings, SensingScenario};
use serde_json::{json, Value};

use crate::config::Resolver;
use crate::output::{json_bytes, metadata, report, sweep_csv};
use crate::Failure;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Model {
    GaussianAperture,
    FarField,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Policy {
    Error,
    Clamp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Noise {
    Averaged,
    PerMode,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Forward-path transmissivity.
    #[arg(long)]
    eta1: Option<f64>,
    /// Return-path transmissivity.
    #[arg(long)]
    eta2: Option<f64>,
    /// Forward-path thermal occupancy.
    #[arg(long)]
    nb1: Option<f64>,
    /// Return-path thermal occupancy.
    #[arg(long)]
    nb2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModeArgs {
    /// Covertness level.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of modes; `1e6` notation accepted. Overrides bandwidth * time.
    #[arg(long)]
    n: Option<String>,
    /// Source bandwidth, Hz.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Probing time, s.
    #[arg(long)]
    time: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    /// Range to the target, m.
    #[arg(long = "L")]
    range: Option<f64>,
    /// Transmitter aperture radius, m.
    #[arg(long)]
    r_t: Option<f64>,
    /// Target aperture radius, m.
    #[arg(long)]
    r_target: Option<f64>,
    /// Background temperature, K.
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    area_factor: Option<f64>,
    #[arg(long, value_enum)]
    eta_policy: Option<Policy>,
    /// Clamp level for `--eta-policy clamp`.
    #[arg(long)]
    eta_max: Option<f64>,
    #[arg(long, value_enum)]
    model: Option<Model>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    epsilon: Option<f64>,
    /// Source bandwidth, Hz.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Probing time, s.
    #[arg(long)]
    time: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScenarioCmdArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    modes: ModeArgs,
    /// Target phase.
    #[arg(long)]
    theta: Option<f64>,
    /// Signal occupancy for D and the covariance matrices; default is the budget.
    #[arg(long)]
    ns: Option<f64>,
    /// Also evaluate D with the Fock-space oracle.
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    epsilon: Option<f64>,
    /// ASE source bandwidth, Hz.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Coherent-source bandwidth, Hz; defaults to the ASE bandwidth.
    #[arg(long)]
    bandwidth_coh: Option<f64>,
    #[arg(long)]
    time: Option<f64>,
    /// Local-oscillator occupancy for the finite-LO QFI.
    #[arg(long)]
    nlo: Option<f64>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    modes: ModeArgs,
    #[arg(long)]
    theta: Option<f64>,
    /// Number of trials; `2e5` notation accepted.
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, value_enum)]
    noise_model: Option<Noise>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    #[command(flatten)]
    bound: BoundArgs,
    /// Lowest frequency, Hz.
    #[arg(long)]
    fmin: Option<f64>,
    /// Highest frequency, Hz.
    #[arg(long)]
    fmax: Option<f64>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    #[command(flatten)]
    bound: BoundArgs,
    /// Evaluate at this wavelength instead of searching, m.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[command(flatten)]
    bound: BoundArgs,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    ns: Option<f64>,
    #[arg(long)]
    nlo: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Phase offset of the second state in the fidelity check.
    #[arg(long)]
    dtheta: Option<f64>,
    /// Per-input photon-number cutoff; chosen from the tail bound if absent.
    #[arg(long)]
    cutoff: Option<String>,
}

fn scenario_from(r: &mut Resolver, a: &ScenarioArgs) -> Result<SensingScenario, Failure> {
    let eta1 = r.f64("eta1", a.eta1, None)?;
    let eta2 = r.f64("eta2", a.eta2, None)?;
    let nb1 = r.f64("nb1", a.nb1, None)?;
    let nb2 = r.f64("nb2", a.nb2, None)?;
    Ok(SensingScenario::new(eta1, eta2, nb1, nb2)?)
}

fn modes_from(r: &mut Resolver, a: &ModeArgs) -> Result<(f64, u64), Failure> {
    let epsilon = r.f64("epsilon", a.epsilon, Some(1e-3))?;
    let n = match r.opt_count("n", a.n.as_deref())? {
        Some(n) => {
            r.allow("bandwidth");
            r.allow("time");
            n
        }
        None => {
            let w = r.f64("bandwidth", a.bandwidth, Some(3e12))?;
            let t = r.f64("time", a.time, Some(1.0))?;
            modes_from_bandwidth(w, t)?
        }
    };
    Ok((epsilon, n))
}

fn geometry_from(r: &mut Resolver, a: &GeometryArgs) -> Result<LinkGeometry, Failure> {
    let d = LinkGeometry::new(1.0);
    let range = r.f64("L", a.range, None)?;
    let policy = match r.choice("eta-policy", a.eta_policy, Policy::Error)? {
        Policy::Error => {
            r.allow("eta-max");
            EtaPolicy::Error
        }
        Policy::Clamp => EtaPolicy::Clamp(r.f64("eta-max", a.eta_max, Some(SWEEP_CLAMP))?),
    };
    let model = match r.choice("model", a.model, Model::GaussianAperture)? {
        Model::GaussianAperture => TransmissivityModel::GaussianAperture,
        Model::FarField => TransmissivityModel::FarField,
    };
    let g = LinkGeometry {
        range_m: range,
        r_t: r.f64("r-t", a.r_t, Some(d.r_t))?,
        r_target: r.f64("r-target", a.r_target, Some(d.r_target))?,
        t0_k: r.f64("t0", a.t0, Some(d.t0_k))?,
        area_factor: r.f64("area-factor", a.area_factor, Some(d.area_factor))?,
        eta_policy: policy,
        model,
    };
    g.validate()?;
    Ok(g)
}

fn bound_from(r: &mut Resolver, a: &BoundArgs) -> Result<BoundSettings, Failure> {
    let d = BoundSettings::default();
    Ok(BoundSettings {
        epsilon: r.f64("epsilon", a.epsilon, Some(d.epsilon))?,
        bandwidth_hz: r.f64("bandwidth", a.bandwidth, Some(d.bandwidth_hz))?,
        time_s: r.f64("time", a.time, Some(d.time_s))?,
    })
}

fn rows(cm: &CovarianceMatrix) -> Vec<Vec<f64>> {
    let m = cm.entries();
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn finish_json(
    r: &mut Resolver,
    command: &str,
    seed: Option<u64>,
    payload: Value,
) -> Result<Vec<u8>, Failure> {
    let config = std::mem::take(r).finish()?;
    Ok(json_bytes(&report(
        &payload,
        metadata(command, &config, seed),
    )))
}

pub fn scenario(r: &mut Resolver, a: ScenarioCmdArgs) -> Result<Vec<u8>, Failure> {
    let s = scenario_from(r, &a.scenario)?;
    let (epsilon, n) = modes_from(r, &a.modes)?;
    let theta = r.f64("theta", a.theta, Some(0.0))?;
    let ns_flag = r.opt_f64("ns", a.ns)?;
    let use_oracle = r.switch("oracle", a.oracle)?;

    let eff = s.effective();
    let budget = covert_budget(&s, epsilon, n)?;
    let c3 = taylor_c3(&s)?;
    let ns = ns_flag.unwrap_or(budget.ns);
    let d = willie_qre(&s, ns, theta)?;
    let mut payload = json!({
        "eta_eff": eff.eta_eff,
        "nb_eff": eff.nb_eff,
        "c2": budget.c2,
        "c3": c3,
        "ns": budget.ns,
        "n": n,
        "epsilon": epsilon,
        "willie_error_lb": budget.willie_error_lb,
        "small_signal_warning": budget.small_signal_warning,
        "D": { "ns": ns, "theta": theta, "value": d },
        "willie_cm_h0": rows(&willie_cm(&s, 0.0, theta)?),
        "willie_cm_h1": rows(&willie_cm(&s, ns, theta)?),
    });
    if use_oracle {
        let h0 = oracle_willie_state(&s, 0.0, theta, None)?;
        let h1 = oracle_willie_state(&s, ns, theta, None)?;
        let d_fock = oracle_qre(&h0, &h1)?;
        payload["oracle"] = json!({
            "D_fock": d_fock,
            "D_abs_diff": (d - d_fock).abs(),
            "tail_bound": h0.tail_bound().max(h1.tail_bound()),
        });
    }
    finish_json(r, "scenario", None, payload)
}

pub fn bounds(r: &mut Resolver, a: BoundsArgs) -> Result<Vec<u8>, Failure> {
    let s = scenario_from(r, &a.scenario)?;
    let epsilon = r.f64("epsilon", a.epsilon, Some(1e-3))?;
    let bandwidth = r.f64("bandwidth", a.bandwidth, Some(3e12))?;
    let bandwidth_coh = r.f64("bandwidth-coh", a.bandwidth_coh, Some(bandwidth))?;
    let time = r.f64("time", a.time, Some(1.0))?;
    let nlo = r.f64("nlo", a.nlo, Some(1e6))?;
    let rep = estimation_report(
        &s,
        &ReportInputs {
            epsilon,
            bandwidth_ase: bandwidth,
            bandwidth_coh,
            time,
            nlo,
        },
    )?;
    finish_json(
        r,
        "bounds",
        None,
        serde_json::to_value(rep).expect("report serializes"),
    )
}

pub fn mse_mc(r: &mut Resolver, a: McArgs) -> Result<Vec<u8>, Failure> {
    let s = scenario_from(r, &a.scenario)?;
    let (epsilon, n) = modes_from(r, &a.modes)?;
    let theta = r.f64("theta", a.theta, Some(0.5))?;
    let trials = r.count("trials", a.trials.as_deref(), Some(200_000))?;
    let seed = r.count("seed", a.seed.as_deref(), Some(0))?;
    let model = match r.choice("noise-model", a.noise_model, Noise::Averaged)? {
        Noise::Averaged => NoiseModel::Averaged,
        Noise::PerMode => NoiseModel::PerMode,
    };
    let trials =
        usize::try_from(trials).map_err(|_| Failure::Usage("--trials too large".into()))?;
    let res = simulate_heterodyne_mse_with(&s, theta, epsilon, n, trials, seed, model)?;
    let exact = exact_estimator_mse(res.sigma_het_sq)?;
    let mut payload = serde_json::to_value(&res).expect("result serializes");
    payload["theta"] = json!(theta);
    payload["exact_mse"] = json!(exact);
    finish_json(r, "mse-mc", Some(seed), payload)
}

pub fn sweep(r: &mut Resolver, a: SweepArgs) -> Result<Vec<u8>, Failure> {
    let g = geometry_from(r, &a.geometry)?;
    let bs = bound_from(r, &a.bound)?;
    let fmin = r.f64("fmin", a.fmin, Some(PLOT_BAND_HZ.0))?;
    let fmax = r.f64("fmax", a.fmax, Some(PLOT_BAND_HZ.1))?;
    let points = r.count("points", a.points.as_deref(), Some(PLOT_POINTS as u64))?;
    let format = r.choice("format", a.format, Format::Csv)?;
    let points =
        usize::try_from(points).map_err(|_| Failure::Usage("--points too large".into()))?;
    let config = std::mem::take(r).finish()?;
    let meta = metadata("sweep", &config, None);
    let rows = match sweep_frequency(fmin, fmax, points, &g, &bs) {
        Ok(rows) => rows,
        Err(Error::EmptySweep(msg)) => {
            eprintln!("warning: {msg}");
            return Ok(match format {
                Format::Csv => sweep_csv(&[], None)?,
                Format::Json => json_bytes(&report(&json!({ "rows": [] }), meta)),
            });
        }
        Err(e) => return Err(e.into()),
    };
    Ok(match format {
        Format::Csv => sweep_csv(&rows, Some(&meta))?,
        Format::Json => json_bytes(&report(&json!({ "rows": rows }), meta)),
    })
}

pub fn optimize(r: &mut Resolver, a: OptimizeArgs) -> Result<Vec<u8>, Failure> {
    let g = geometry_from(r, &a.geometry)?;
    let bs = bound_from(r, &a.bound)?;
    let payload = match r.opt_f64("lambda", a.lambda)? {
        Some(lambda) => {
            r.allow("lambda-min");
            r.allow("lambda-max");
            let p = c_ase_at(lambda, &g)?;
            let b = bs.bound(p.c_ase)?;
            let mut v = serde_json::to_value(p).expect("point serializes");
            v["B"] = json!(b);
            v
        }
        None => {
            let lo = r.f64("lambda-min", a.lambda_min, Some(DEFAULT_BRACKET.0))?;
            let hi = r.f64("lambda-max", a.lambda_max, Some(DEFAULT_BRACKET.1))?;
            serde_json::to_value(optimize_wavelength(&g, lo, hi, &bs)?).expect("optimum serializes")
        }
    };
    finish_json(r, "optimize", None, payload)
}

pub fn reproduce(r: &mut Resolver, a: ReproduceArgs) -> Result<Vec<u8>, Failure> {
    let bs = bound_from(r, &a.bound)?;
    let format = r.choice("format", a.format, Format::Json)?;
    let reports = convention_sweep(&bs);
    let matched: Vec<_> = reports
        .iter()
        .filter(|c| c.all_matched)
        .map(|c| c.convention)
        .collect();
    let minima = [3e3, 5e3]
        .iter()
        .map(|&l| minimum_check(&LinkGeometry::new(l), &bs))
        .collect::<Result<Vec<_>, _>>()?;
    let config = std::mem::take(r).finish()?;
    let meta = metadata("reproduce-paper", &config, None);
    match format {
        Format::Json => {
            let payload = json!({
                "outcome": if matched.is_empty() { "sensitivity-report" } else { "reproduced" },
                "matching_conventions": matched,
                "targets": PUBLISHED_TARGETS,
                "conventions": reports,
                "minimum_checks": minima,
                "minimum_checks_passed": minima.iter().all(|m| m.passed),
            });
            Ok(json_bytes(&report(&payload, meta)))
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "model",
                "area_factor",
                "eta_policy",
                "target",
                "lambda_m",
                "B",
                "expected_lambda_m",
                "expected_B",
                "d_lambda_m",
                "rel_d_B",
                "matched",
                "error",
            ])
            .map_err(std::io::Error::from)?;
            let f = crate::output::float;
            let o = |x: Option<f64>| x.map(f).unwrap_or_default();
            for c in &reports {
                let model = serde_json::to_value(c.convention.model).expect("model serializes");
                let policy = match c.convention.eta_policy {
                    EtaPolicy::Error => "error".to_string(),
                    EtaPolicy::Clamp(m) => format!("clamp:{}", f(m)),
                };
                for t in &c.residuals {
                    w.write_record([
                        model.as_str().unwrap_or_default().to_string(),
                        f(c.convention.area_factor),
                        policy.clone(),
                        t.label.clone(),
                        o(t.lambda_m),
                        o(t.b),
                        o(t.expected_lambda_m),
                        f(t.expected_b),
                        o(t.d_lambda_m),
                        o(t.rel_d_b),
                        t.matched.to_string(),
                        t.error.clone().unwrap_or_default(),
                    ])
                    .map_err(std::io::Error::from)?;
                }
            }
            let mut out = w.into_inner().map_err(|e| e.into_error())?;
            out.extend_from_slice(b"# metadata ");
            out.extend_from_slice(&serde_json::to_vec(&meta).expect("json serializes"));
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn oracle_check(r: &mut Resolver, a: OracleArgs) -> Result<Vec<u8>, Failure> {
    let s = scenario_from(r, &a.scenario)?;
    let ns = r.f64("ns", a.ns, Some(0.05))?;
    let nlo = r.f64("nlo", a.nlo, Some(0.1))?;
    let theta = r.f64("theta", a.theta, Some(0.3))?;
    let dtheta = r.f64("dtheta", a.dtheta, Some(0.1))?;
    let cutoff = r
        .opt_count("cutoff", a.cutoff.as_deref())?
        .map(|c| usize::try_from(c).map_err(|_| Failure::Usage("--cutoff too large".into())))
        .transpose()?;

    let d_gauss = willie_qre(&s, ns, theta)?;
    let w0 = oracle_willie_state(&s, 0.0, theta, cutoff)?;
    let w1 = oracle_willie_state(&s, ns, theta, cutoff)?;
    let d_fock = oracle_qre(&w0, &w1)?;

    let p0 = ProbeSettings::new(ns, nlo, theta)?;
    let p1 = ProbeSettings::new(ns, nlo, theta + dtheta)?;
    let f_gauss = gaussian_fidelity(&alice_cm(&s, &p0)?, &alice_cm(&s, &p1)?)?;
    let a0 = oracle_alice_state(&s, &p0, cutoff)?;
    let a1 = oracle_alice_state(&s, &p1, cutoff)?;
    let f_fock = oracle_fidelity(&a0, &a1)?;

    let tail = [&w0, &w1, &a0, &a1]
        .iter()
        .map(|m| m.tail_bound())
        .fold(0.0, f64::max);
    let payload = json!({
        "D_gaussian": d_gauss,
        "D_fock": d_fock,
        "D_abs_diff": (d_gauss - d_fock).abs(),
        "F_gaussian": f_gauss,
        "F_fock": f_fock,
        "F_abs_diff": (f_gauss - f_fock).abs(),
        "tail_bound": tail,
        "requested_tail_bound": DEFAULT_TAIL_BOUND,
    });
    finish_json(r, "oracle-check", None, payload)
}
