use std::process::ExitCode;
use std::time::Instant;

use encircle_core::controller::{radius, ControllerConfig};
use encircle_core::estimator::psi_j;
use encircle_core::fwnn::{FwnnConfig, FwnnState};
use encircle_core::harness::{
    persistent_excitation, run, trace, Mode, PeReport, RunAbort, RunOutput, Scenario,
};
use encircle_core::world::MeasurementFrame;
use encircle_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn after(out: &RunOutput, k: u64) -> impl Iterator<Item = &encircle_core::harness::StepRecord> {
    out.records.iter().filter(move |r| r.k > k)
}

fn a1(out: &RunOutput, elapsed: f64) -> Outcome {
    let max_e = after(out, 100).map(|r| r.e.amax()).fold(0.0, f64::max);
    let min_angle = after(out, 100)
        .map(|r| r.antipodal_deg)
        .fold(180.0, f64::min);
    let complete = out.abort.is_none() && out.records.len() == 400;
    outcome(
        complete && max_e < 0.5 && min_angle > 170.0 && elapsed < 5.0,
        format!("max |e| comp (k > 100) = {max_e:.4e}, min antipodal = {min_angle:.2} deg, runtime = {elapsed:.3} s"),
    )
}

fn a2() -> Outcome {
    let mut s = Scenario::reference();
    s.run.mode = Mode::KnownDisplacement;
    let out = run(&s).unwrap();
    let worst = out
        .records
        .iter()
        .filter(|r| r.k >= 100)
        .map(|r| r.e_s.norm())
        .fold(0.0, f64::max);
    outcome(
        out.abort.is_none() && worst <= 1e-10,
        format!("max ||e_s|| for k >= 100 = {worst:.3e}"),
    )
}

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

fn a3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let n = 10_000;
    for _ in 0..n {
        let x1 = random_vec(&mut rng, 10.0);
        let x2 = random_vec(&mut rng, 10.0);
        let s = random_vec(&mut rng, 10.0);
        let psi = psi_j((x1 - s).norm(), (x2 - s).norm(), &x1, &x2);
        worst = worst.max((psi - (x1 - x2).dot(&s)).abs());
    }
    outcome(
        worst <= 1e-9,
        format!("{n} configurations, max |psi_j - p12.s_j| = {worst:.3e}"),
    )
}

fn a4(out: &RunOutput) -> Outcome {
    let worst = out
        .records
        .iter()
        .skip(1)
        .map(|r| r.identity_residual)
        .fold(0.0, f64::max);
    outcome(
        worst.is_finite() && worst <= 1e-8 && out.records.len() > 1,
        format!(
            "{} updates, max infinity-norm residual = {worst:.3e}",
            out.records.len() - 1
        ),
    )
}

/// Residual trace of the network for constant `h` and constant `p12`.
fn residuals(alpha: f64, h: &Vec3, steps: usize) -> Vec<f64> {
    let cfg = FwnnConfig {
        learning_rate: alpha,
        ..FwnnConfig::reference()
    };
    let mut net = FwnnState::new(cfg);
    let p12 = Vec3::new(2.0, 1.2, 0.3);
    let dp = p12.dot(h);
    (0..steps)
        .map(|k| net.update_weights(&p12, dp, k as u64).unwrap().abs())
        .collect()
}

fn rises(eps: &[f64]) -> usize {
    eps[5..].windows(2).filter(|w| w[1] > w[0] + 1e-9).count()
}

fn a5() -> Outcome {
    // slow drift, and a displacement putting the wavelet near its peak
    let small = Vec3::new(0.3, 0.2, 0.1);
    let p12 = Vec3::new(2.0, 1.2, 0.3);
    let large = p12 * (1001.0 / p12.norm_squared());
    let mut passed = true;
    let mut parts = Vec::new();
    for alpha in [0.01, 0.1, 0.3] {
        for (label, h) in [("slow", &small), ("peak", &large)] {
            let eps = residuals(alpha, h, 200);
            let n = rises(&eps);
            passed &= n == 0;
            parts.push(format!(
                "alpha {alpha} {label}: {n} rises, |eps| {:.3e} -> {:.3e}",
                eps[5], eps[199]
            ));
        }
    }
    let eps = residuals(0.6, &large, 200);
    parts.push(format!(
        "alpha 0.6 peak (not required): {} rises, |eps| {:.3e} -> {:.3e}",
        rises(&eps),
        eps[5],
        eps[199]
    ));
    outcome(passed, parts.join("; "))
}

fn a6(baseline: &Outcome) -> Outcome {
    let mut s = Scenario::reference();
    s.controller.beta = 0.2;
    let out = run(&s).unwrap();
    match out.abort {
        Some(RunAbort::Diverged { k, norm }) => outcome(
            baseline.passed && k < 200,
            format!(
                "beta -0.85 converges: {}; beta 0.2 diverged at k = {k} (norm {norm:.3e})",
                baseline.passed
            ),
        ),
        other => outcome(false, format!("beta 0.2 did not diverge: {other:?}")),
    }
}

fn a7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut below_b = 0;
    let n = 10_000;
    for _ in 0..n {
        let z = rng.random_range(-2.0..2.0);
        let m = rng.random_range(1..=5);
        let targets: Vec<Vec3> = (0..m)
            .map(|_| Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), z))
            .collect();
        let c = targets.iter().sum::<Vec3>() / m as f64;
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let dir = Vec3::new(phi.cos(), phi.sin(), 0.0);
        let x1 = c + dir * rng.random_range(0.5..8.0);
        let x2 = c - dir * rng.random_range(0.5..8.0);
        let cfg = ControllerConfig {
            b: rng.random_range(0.1..2.0),
            rounding_step: if rng.random_bool(0.5) { 1.0 } else { 0.0 },
            ..ControllerConfig::reference()
        };
        let meas = MeasurementFrame {
            w: [Vec3::zeros(); 2],
            l: [
                targets.iter().map(|s| (x1 - s).norm()).collect(),
                targets.iter().map(|s| (x2 - s).norm()).collect(),
            ],
            ell12: (x1 - x2).norm(),
            noise_seed: 0,
        };
        let out = radius(&meas, &c, &x1, &x2, &cfg).unwrap();
        let brute = targets
            .iter()
            .map(|s| (s.x - c.x).hypot(s.y - c.y))
            .fold(0.0, f64::max);
        worst = worst.max((out.max_distance - brute).abs());
        if out.radius < cfg.b {
            below_b += 1;
        }
    }
    outcome(
        worst <= 1e-6 && below_b == 0,
        format!("{n} placements, max distance error = {worst:.3e}, radii below b = {below_b}"),
    )
}

fn a8(out: &RunOutput) -> Outcome {
    let min = after(out, 100)
        .map(|r| r.min_agent_target)
        .fold(f64::INFINITY, f64::min);
    outcome(
        min > 0.5,
        format!("min agent-target distance (k > 100) = {min:.4}"),
    )
}

fn a9(out: &RunOutput, beta: f64) -> Outcome {
    let start = out
        .records
        .iter()
        .position(|r| r.k > 100)
        .unwrap_or(out.records.len());
    let converged = PeReport::from_records(&out.records[start..], &out.records, 48, beta);
    let still = vec![Vec3::new(0.0, -3.0, 0.0); 200];
    let stationary = persistent_excitation(&still, &[3.0; 200], 48, 1.0);
    outcome(
        converged.passed && !stationary.passed,
        format!(
            "converged: {}/{} windows pass, eigenvalues {:.4e} .. {:.4e}; stationary agents: {}",
            converged.windows_checked - converged.windows_failed,
            converged.windows_checked,
            converged.min_eigenvalue,
            converged.max_eigenvalue,
            if stationary.passed { "pass" } else { "fail" }
        ),
    )
}

fn a10() -> Outcome {
    let s = Scenario::reference();
    let dir = std::env::temp_dir().join(format!("encircle-a10-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let out = run(&s).unwrap();
        let path = dir.join(format!("trace-{i}.csv"));
        trace::write_trace(std::fs::File::create(&path).unwrap(), 3, &out.records).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    std::fs::remove_dir_all(&dir).unwrap();
    outcome(
        files[0] == files[1] && !files[0].is_empty(),
        format!(
            "trace files of {} bytes, identical = {}",
            files[0].len(),
            files[0] == files[1]
        ),
    )
}

fn main() -> ExitCode {
    let scenario = Scenario::reference();
    let t = Instant::now();
    let baseline = run(&scenario).unwrap();
    let elapsed = t.elapsed().as_secs_f64();

    let r1 = a1(&baseline, elapsed);
    let r6 = a6(&r1);
    let results = [
        ("A1", "reference run", r1),
        ("A2", "known-displacement estimator accuracy", a2()),
        ("A3", "output identity", a3()),
        ("A4", "least-squares gain identity", a4(&baseline)),
        ("A5", "network residual monotonicity", a5()),
        ("A6", "controller gain boundary", r6),
        ("A7", "radius from ranges", a7()),
        ("A8", "collision clearance", a8(&baseline)),
        (
            "A9",
            "persistent excitation",
            a9(&baseline, scenario.controller.beta),
        ),
        ("A10", "determinism", a10()),
    ];
    let mut failed = 0;
    for (id, name, r) in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{id} {tag} {name}: {}", r.detail);
        failed += usize::from(!r.passed);
    }
    println!(
        "{} of {} criteria pass",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
