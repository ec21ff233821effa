use std::collections::BTreeMap;

use covsense::link::{SweepRow, CONSTANTS_VERSION};
use covsense::montecarlo::RNG_NAME;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const TOOL: &str = "covsense";
pub const SWEEP_HEADER: [&str; 6] = ["f_hz", "lambda_m", "eta", "nbar_b", "c_ase", "B"];

/// Reproducibility block attached to every report.
pub fn metadata(command: &str, config: &BTreeMap<String, Value>, seed: Option<u64>) -> Value {
    json!({
        "tool": TOOL,
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "constants": CONSTANTS_VERSION,
        "rng": RNG_NAME,
        "seed": seed,
    })
}

/// A JSON report: the payload fields followed by `metadata`.
pub fn report<T: Serialize>(payload: &T, metadata: Value) -> Value {
    let mut obj = match serde_json::to_value(payload).expect("report payload serializes") {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    obj.insert("metadata".into(), metadata);
    Value::Object(obj)
}

pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("json serializes");
    out.push(b'\n');
    out
}

/// Shortest representation that parses back to the same double.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        String::new()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow], metadata: Option<&Value>) -> std::io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            float(r.f_hz),
            float(r.lambda_m),
            float(r.eta),
            float(r.nbar_b),
            opt(r.c_ase),
            opt(r.b),
        ])?;
    }
    let mut out = w.into_inner().map_err(|e| e.into_error())?;
    if let Some(m) = metadata {
        out.extend_from_slice(b"# metadata ");
        out.extend_from_slice(&serde_json::to_vec(m).expect("json serializes"));
        out.push(b'\n');
    }
    Ok(out)
}

pub fn error_json(kind: &str, message: &str) -> Vec<u8> {
    let mut out = serde_json::to_vec(&json!({ "error": { "kind": kind, "message": message } }))
        .expect("json serializes");
    out.push(b'\n');
    out
}
