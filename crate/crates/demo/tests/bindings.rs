use encircle_demo::{fwnn_json, radius_json, simulate_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn default_simulation_matches_bundled_run() {
    let v = parse(&simulate_json("{}").unwrap());
    assert_eq!(v["x1"].as_array().unwrap().len(), 400);
    assert_eq!(v["targets"].as_array().unwrap().len(), 3);
    assert_eq!(v["validated"], true);
    assert!(v["abort"].is_null());
    let late = v["as_error"].as_array().unwrap()[101..]
        .iter()
        .map(|e| e.as_f64().unwrap())
        .fold(0.0, f64::max);
    assert!(late < 0.5);
}

#[test]
fn simulation_parameters_apply() {
    let v = parse(&simulate_json(r#"{"beta": 0.2, "steps": 300}"#).unwrap());
    assert_eq!(v["validated"], false);
    assert!(v["abort"].as_str().unwrap().starts_with("diverged"));

    let v = parse(
        &simulate_json(r#"{"known_displacement": true, "stationary_targets": true, "steps": 120}"#)
            .unwrap(),
    );
    let es = v["estimation_error"].as_array().unwrap();
    assert_eq!(es.len(), 120);
    assert!(es[110].as_f64().unwrap() < 1e-10);
}

#[test]
fn invalid_simulation_input_is_reported() {
    assert!(simulate_json(r#"{"gain": 1}"#).is_err());
    assert!(simulate_json(r#"{"rho": 3.0}"#).is_err());
    assert!(simulate_json("not json").is_err());
}

#[test]
fn radius_explorer_recovers_true_distance() {
    let params = r#"{"agents": [[-3, 0.5], [3, -0.5]], "targets": [[-1, 0], [0.2, 0.8], [1, -0.4]], "c_hat": [0, 0]}"#;
    let v = parse(&radius_json(params).unwrap());
    let truth = v["true_distances"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d.as_f64().unwrap())
        .fold(0.0, f64::max);
    assert!((v["max_distance"].as_f64().unwrap() - truth).abs() < 1e-9);
    assert_eq!(v["radius"].as_f64().unwrap(), 1.8);
    assert_eq!(v["circle"].as_array().unwrap().len(), 49);
}

#[test]
fn radius_explorer_rejects_coincident_agents() {
    let params = r#"{"agents": [[1, 1], [1, 1]], "targets": [[0, 0]], "c_hat": [0, 0]}"#;
    assert!(radius_json(params).is_err());
}

#[test]
fn network_curves() {
    let v = parse(&fwnn_json(r#"{"learning_rate": 0.1, "h": [300, 200, 100]}"#).unwrap());
    assert_eq!(v["wavelet"].as_array().unwrap().len(), 301);
    let r = v["residual"].as_array().unwrap();
    assert_eq!(r.len(), 200);
    assert!(r[199].as_f64().unwrap() < 1e-6 * r[0].as_f64().unwrap());
    assert!(fwnn_json(r#"{"learning_rate": 1.5}"#).is_err());
}
