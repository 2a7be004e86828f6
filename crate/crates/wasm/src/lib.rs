//! WebAssembly bindings behind `www/index.html`.
//!
//! Every export returns a JSON document of the form
//! `{"axis": .., "metric": .., "curves": [{"label": .., "x": [..], "y": [..]}]}`.

use fbl_noma::arq::LatencyModel;
use fbl_noma::montecarlo::Channel;
use fbl_noma::report::curves;
use fbl_noma::sweep::{run_sweep, Axis, AxisRange, Evaluator, Metric, SweepSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
struct Curve {
    label: String,
    x: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Plot {
    axis: &'static str,
    metric: &'static str,
    curves: Vec<Curve>,
}

fn plot(spec: &SweepSpec, metric: Metric) -> Result<String, String> {
    let records = run_sweep(spec).map_err(|e| e.to_string())?;
    let curves = curves(&records, spec.axis)
        .into_iter()
        .map(|c| Curve {
            x: c.xs(),
            // JSON has no infinities; infeasible points plot as gaps.
            y: c.ys(metric),
            label: c.label,
        })
        .collect();
    let doc = Plot {
        axis: spec.axis.as_str(),
        metric: metric.as_str(),
        curves,
    };
    serde_json::to_string(&doc).map_err(|e| e.to_string())
}

fn parse_axis(axis: &str) -> Result<(Axis, AxisRange), String> {
    match axis {
        "k" => Ok((Axis::K, AxisRange::stepped(100.0, 2000.0, 25.0))),
        "n" => Ok((Axis::N, AxisRange::stepped(100.0, 2000.0, 25.0))),
        "power_db" => Ok((Axis::PowerDb, AxisRange::stepped(0.0, 30.0, 0.5))),
        other => Err(format!("unsupported axis `{other}`")),
    }
}

/// NOMA and OMA throughput of both users along `axis` (`k`, `n` or
/// `power_db`), the other parameters held at the given values.
pub fn throughput_curves_json(
    channel: &str,
    axis: &str,
    k: u32,
    n: u32,
    p_db: f64,
    beta: f64,
) -> Result<String, String> {
    let channel: Channel = channel.parse().map_err(|e: fbl_noma::Error| e.to_string())?;
    let (axis, range) = parse_axis(axis)?;
    let mut spec = SweepSpec::new(channel, axis, range);
    spec.fixed.k = k;
    spec.fixed.n = n;
    spec.fixed.p1_db = p_db;
    spec.fixed.p2_db = p_db;
    spec.fixed.beta = beta;
    plot(&spec, Metric::Throughput)
}

/// Rayleigh outage against blocklength: linearized closed forms next to
/// the quadrature-exact values.
pub fn fading_outage_json(k: u32, p1_db: f64, p2_db: f64, beta: f64) -> Result<String, String> {
    let mut spec = SweepSpec::new(Channel::Rayleigh, Axis::N, AxisRange::stepped(100.0, 2000.0, 50.0));
    spec.fixed.k = k;
    spec.fixed.p1_db = p1_db;
    spec.fixed.p2_db = p2_db;
    spec.fixed.beta = beta;
    spec.metrics = vec![Metric::Epsilon];
    spec.evaluators = vec![Evaluator::ClosedForm, Evaluator::Quadrature];
    plot(&spec, Metric::Epsilon)
}

/// Type-I ARQ under Rayleigh fading against blocklength for `M = 1..=m_max`.
pub fn arq_curves_json(
    metric: &str,
    k: u32,
    p_db: f64,
    m_max: u32,
    feedback_delay: u32,
    latency_model: &str,
) -> Result<String, String> {
    let metric = match metric {
        "throughput" => Metric::Throughput,
        "epsilon" => Metric::Epsilon,
        "latency" => Metric::Latency,
        other => return Err(format!("unknown metric `{other}`")),
    };
    if !(1..=6).contains(&m_max) {
        return Err("m_max must lie in 1..=6".into());
    }
    let latency_model: LatencyModel = latency_model.parse().map_err(|e: fbl_noma::Error| e.to_string())?;
    let mut spec = SweepSpec::new(Channel::Rayleigh, Axis::N, AxisRange::stepped(100.0, 2000.0, 25.0));
    spec.fixed.k = k;
    spec.fixed.p1_db = p_db;
    spec.fixed.p2_db = p_db;
    spec.fixed.feedback_delay = feedback_delay;
    spec.fixed.latency_model = latency_model;
    spec.oma_betas = vec![0.8];
    spec.m_values = (1..=m_max).collect();
    spec.metrics = vec![metric];
    plot(&spec, metric)
}

#[wasm_bindgen]
pub fn throughput_curves(channel: &str, axis: &str, k: u32, n: u32, p_db: f64, beta: f64) -> Result<String, JsValue> {
    throughput_curves_json(channel, axis, k, n, p_db, beta).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fading_outage(k: u32, p1_db: f64, p2_db: f64, beta: f64) -> Result<String, JsValue> {
    fading_outage_json(k, p1_db, p2_db, beta).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn arq_curves(
    metric: &str,
    k: u32,
    p_db: f64,
    m_max: u32,
    feedback_delay: u32,
    latency_model: &str,
) -> Result<String, JsValue> {
    arq_curves_json(metric, k, p_db, m_max, feedback_delay, latency_model).map_err(|e| JsValue::from_str(&e))
}
