//! Browser bindings: a closed-loop run, the radius rule for a hand-placed
//! geometry, and network response curves. Every entry point takes and
//! returns JSON text.

use encircle_core::controller::{preset_trajectory, radius, ControllerConfig};
use encircle_core::fwnn::{mother_wavelet, FwnnConfig, FwnnState};
use encircle_core::harness::{run, trace::RunMeta, Mode, Scenario};
use encircle_core::world::{MeasurementFrame, TargetScript};
use encircle_core::Vec3;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub beta: Option<f64>,
    pub rho: Option<f64>,
    pub b: Option<f64>,
    pub forgetting: Option<f64>,
    pub learning_rate: Option<f64>,
    pub steps: Option<usize>,
    pub known_displacement: bool,
    pub stationary_targets: bool,
    pub distance_std: Option<f64>,
    pub seed: Option<u64>,
}

type Xy = [f64; 2];

fn xy(v: &Vec3) -> Xy {
    [v.x, v.y]
}

#[derive(Debug, Serialize)]
pub struct SimResult {
    pub x1: Vec<Xy>,
    pub x2: Vec<Xy>,
    pub targets: Vec<Vec<Xy>>,
    pub center: Vec<Xy>,
    pub c_hat: Vec<Xy>,
    pub radius: Vec<f64>,
    pub as_error: Vec<f64>,
    pub estimation_error: Vec<f64>,
    pub antipodal_deg: Vec<f64>,
    pub validated: bool,
    pub summary: String,
    pub abort: Option<String>,
}

pub fn simulate_json(params: &str) -> Result<String, String> {
    let p: SimParams = serde_json::from_str(params).map_err(|e| e.to_string())?;
    let mut s = Scenario::reference();
    let c = &mut s.controller;
    c.beta = p.beta.unwrap_or(c.beta);
    c.rho = p.rho.unwrap_or(c.rho);
    c.b = p.b.unwrap_or(c.b);
    s.estimator.forgetting = p.forgetting.unwrap_or(s.estimator.forgetting);
    s.fwnn.learning_rate = p.learning_rate.unwrap_or(s.fwnn.learning_rate);
    s.run.steps = p.steps.unwrap_or(s.run.steps).min(5000);
    s.run.seed = p.seed.unwrap_or(s.run.seed);
    s.run.noise.distance_std = p.distance_std.unwrap_or(0.0);
    if p.known_displacement {
        s.run.mode = Mode::KnownDisplacement;
    }
    if p.stationary_targets {
        s.targets = vec![TargetScript::stationary(); s.targets.len()];
    }
    let out = run(&s).map_err(|e| e.to_string())?;
    let meta = RunMeta::new(&s, &out);
    let r = &out.records;
    let m = s.world.targets.len();
    let result = SimResult {
        x1: r.iter().map(|r| xy(&r.x1)).collect(),
        x2: r.iter().map(|r| xy(&r.x2)).collect(),
        targets: (0..m)
            .map(|j| r.iter().map(|r| xy(&r.targets[j])).collect())
            .collect(),
        center: r.iter().map(|r| xy(&r.center)).collect(),
        c_hat: r.iter().map(|r| xy(&r.c_hat)).collect(),
        radius: r.iter().map(|r| r.radius).collect(),
        as_error: r.iter().map(|r| r.e.amax()).collect(),
        estimation_error: r.iter().map(|r| r.e_s.norm()).collect(),
        antipodal_deg: r.iter().map(|r| r.antipodal_deg).collect(),
        validated: meta.validated,
        summary: meta.summary_text(),
        abort: out.abort.as_ref().map(|a| a.to_string()),
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusParams {
    pub agents: [Xy; 2],
    pub targets: Vec<Xy>,
    pub c_hat: Xy,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_step")]
    pub rounding_step: f64,
}

fn default_b() -> f64 {
    0.8
}

fn default_step() -> f64 {
    1.0
}

#[derive(Debug, Serialize)]
pub struct RadiusResult {
    pub max_distance: f64,
    pub radius: f64,
    pub clamped: bool,
    /// Ground-truth distances from `c_hat` to each target.
    pub true_distances: Vec<f64>,
    /// One revolution of the preset trajectory around `c_hat`.
    pub circle: Vec<Xy>,
}

fn planar(p: &Xy) -> Vec3 {
    Vec3::new(p[0], p[1], 0.0)
}

pub fn radius_json(params: &str) -> Result<String, String> {
    let p: RadiusParams = serde_json::from_str(params).map_err(|e| e.to_string())?;
    let x1 = planar(&p.agents[0]);
    let x2 = planar(&p.agents[1]);
    let c_hat = planar(&p.c_hat);
    let targets: Vec<Vec3> = p.targets.iter().map(planar).collect();
    let cfg = ControllerConfig {
        b: p.b,
        rounding_step: p.rounding_step,
        ..ControllerConfig::reference()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let frame = MeasurementFrame {
        w: [Vec3::zeros(); 2],
        l: [
            targets.iter().map(|s| (x1 - s).norm()).collect(),
            targets.iter().map(|s| (x2 - s).norm()).collect(),
        ],
        ell12: (x1 - x2).norm(),
        noise_seed: 0,
    };
    let out = radius(&frame, &c_hat, &x1, &x2, &cfg).map_err(|e| e.to_string())?;
    let circle = (0..=cfg.period())
        .map(|k| xy(&(c_hat + preset_trajectory(out.radius, k as u64, &cfg, 0.0).upsilon)))
        .collect();
    let result = RadiusResult {
        max_distance: out.max_distance,
        radius: out.radius,
        clamped: out.clamped,
        true_distances: targets.iter().map(|s| (s - c_hat).norm()).collect(),
        circle,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FwnnParams {
    pub learning_rate: f64,
    pub p12: [f64; 3],
    pub h: [f64; 3],
    pub steps: usize,
    pub delta_psi_range: [f64; 2],
    pub samples: usize,
}

impl Default for FwnnParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            p12: [2.0, 1.2, 0.3],
            h: [0.3, 0.2, 0.1],
            steps: 200,
            delta_psi_range: [-3000.0, 3000.0],
            samples: 301,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FwnnResult {
    pub delta_psi: Vec<f64>,
    pub wavelet: Vec<f64>,
    /// `|delta_psi - p12 . h_hat|` while training on the constant pair.
    pub residual: Vec<f64>,
    pub final_prediction: [f64; 3],
}

pub fn fwnn_json(params: &str) -> Result<String, String> {
    let p: FwnnParams = serde_json::from_str(params).map_err(|e| e.to_string())?;
    let cfg = FwnnConfig {
        learning_rate: p.learning_rate,
        ..FwnnConfig::reference()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let samples = p.samples.clamp(2, 5000);
    let [lo, hi] = p.delta_psi_range;
    let delta_psi: Vec<f64> = (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect();
    let wavelet = delta_psi.iter().map(|d| mother_wavelet(*d, &cfg)).collect();

    let p12 = Vec3::from(p.p12);
    let dp = p12.dot(&Vec3::from(p.h));
    let mut net = FwnnState::new(cfg);
    let residual = (0..p.steps.min(100_000))
        .map(|k| net.update_weights(&p12, dp, k as u64).map(f64::abs))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let h_hat = net.predict(dp).map_err(|e| e.to_string())?;
    let result = FwnnResult {
        delta_psi,
        wavelet,
        residual,
        final_prediction: [h_hat.x, h_hat.y, h_hat.z],
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

fn to_js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(params: &str) -> Result<String, JsError> {
    to_js(simulate_json(params))
}

#[wasm_bindgen(js_name = radiusExplorer)]
pub fn radius_explorer(params: &str) -> Result<String, JsError> {
    to_js(radius_json(params))
}

#[wasm_bindgen(js_name = fwnnCurves)]
pub fn fwnn_curves(params: &str) -> Result<String, JsError> {
    to_js(fwnn_json(params))
}
