use fbl_noma_wasm::{arq_curves_json, fading_outage_json, throughput_curves_json};
use serde_json::Value;

fn parse(json: &str) -> Value {
    serde_json::from_str(json).unwrap()
}

#[test]
fn awgn_power_sweep_is_monotone_in_power() {
    let v = parse(&throughput_curves_json("awgn", "power_db", 500, 500, 10.0, 0.8).unwrap());
    assert_eq!(v["axis"], "power_db");
    assert_eq!(v["metric"], "throughput");
    let curves = v["curves"].as_array().unwrap();
    let y = |label: &str| -> Vec<f64> {
        let c = curves.iter().find(|c| c["label"] == label).unwrap();
        c["y"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect()
    };
    for label in ["NOMA User 1", "OMA User 1"] {
        let ys = y(label);
        assert!(ys.windows(2).all(|w| w[1] >= w[0]), "{label}");
        assert!(ys.iter().all(|&t| (0.0..=1.0).contains(&t)), "{label}");
    }
}

#[test]
fn closed_form_tracks_quadrature_at_long_blocks() {
    let v = parse(&fading_outage_json(500, 10.0, 10.0, 0.8).unwrap());
    let curves = v["curves"].as_array().unwrap();
    let last = |label: &str| curves.iter().find(|c| c["label"] == label).unwrap()["y"]
        .as_array()
        .unwrap()
        .last()
        .unwrap()
        .as_f64()
        .unwrap();
    let cf = last("NOMA User 1 [closed_form]");
    let quad = last("NOMA User 1 [quadrature]");
    assert!((cf - quad).abs() < 1e-2, "{cf} vs {quad}");
}

#[test]
fn arq_latency_grows_with_feedback_delay() {
    let at = |d| {
        let v = parse(&arq_curves_json("latency", 500, 10.0, 2, d, "expected-rounds").unwrap());
        let curves = v["curves"].as_array().unwrap();
        let c = curves.iter().find(|c| c["label"] == "NOMA User 1, M=2").unwrap();
        c["y"][0].as_f64().unwrap()
    };
    assert!(at(40) > at(0));
}
