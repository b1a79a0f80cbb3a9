//! Ground truth: agent and target kinematics plus measurement synthesis.
//!
//! Nothing in the estimate/control path reads [`WorldState::targets`]; the only
//! thing that crosses the boundary is a [`MeasurementFrame`].

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::{is_finite_vec, Vec3};

const GAMMA_SUM_TOL: f64 = 1e-12;
const SPEED_TOL: f64 = 1e-12;

/// Scripted motion of one target, expressed as a pure function of the step
/// index and the target's initial position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetMotion {
    Stationary,
    /// Constant displacement per step.
    Linear {
        velocity: Vec3,
    },
    /// Position offset `amplitude * sin(omega * k + phase)`.
    Sinusoidal {
        amplitude: Vec3,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Constant-speed travel along the polyline starting at the initial
    /// position; the target parks at the last waypoint.
    WaypointList {
        waypoints: Vec<Vec3>,
        speed: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetScript {
    pub motion: TargetMotion,
    /// Declared bound on the per-step displacement norm, m/step.
    pub max_speed: f64,
}

impl TargetScript {
    pub fn stationary() -> Self {
        Self {
            motion: TargetMotion::Stationary,
            max_speed: 0.0,
        }
    }

    pub fn linear(velocity: Vec3) -> Self {
        Self {
            max_speed: velocity.norm(),
            motion: TargetMotion::Linear { velocity },
        }
    }

    /// Offset of the scripted trajectory from the initial position at step `k`.
    pub fn offset(&self, k: u64, origin: &Vec3) -> Vec3 {
        let kf = k as f64;
        match &self.motion {
            TargetMotion::Stationary => Vec3::zeros(),
            TargetMotion::Linear { velocity } => velocity * kf,
            TargetMotion::Sinusoidal {
                amplitude,
                omega,
                phase,
            } => amplitude * ((omega * kf + phase).sin() - phase.sin()),
            TargetMotion::WaypointList { waypoints, speed } => {
                polyline_point(origin, waypoints, speed * kf) - origin
            }
        }
    }

    /// Displacement `h_j(k)` emitted between steps `k` and `k + 1`.
    pub fn displacement(&self, k: u64, origin: &Vec3) -> Vec3 {
        match &self.motion {
            TargetMotion::Stationary => Vec3::zeros(),
            TargetMotion::Linear { velocity } => *velocity,
            TargetMotion::Sinusoidal {
                amplitude,
                omega,
                phase,
            } => {
                let kf = k as f64;
                amplitude * ((omega * (kf + 1.0) + phase).sin() - (omega * kf + phase).sin())
            }
            TargetMotion::WaypointList { .. } => {
                self.offset(k + 1, origin) - self.offset(k, origin)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_speed.is_finite() && self.max_speed >= 0.0) {
            return Err(SimError::Config(format!(
                "target max_speed must be finite and >= 0, got {}",
                self.max_speed
            )));
        }
        let ok = match &self.motion {
            TargetMotion::Stationary => true,
            TargetMotion::Linear { velocity } => is_finite_vec(velocity),
            TargetMotion::Sinusoidal {
                amplitude,
                omega,
                phase,
            } => is_finite_vec(amplitude) && omega.is_finite() && phase.is_finite(),
            TargetMotion::WaypointList { waypoints, speed } => {
                waypoints.iter().all(is_finite_vec) && speed.is_finite() && *speed >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::Config(
                "target script has non-finite parameters".into(),
            ))
        }
    }
}

fn polyline_point(origin: &Vec3, waypoints: &[Vec3], mut arc: f64) -> Vec3 {
    let mut from = *origin;
    for wp in waypoints {
        let seg = wp - from;
        let len = seg.norm();
        if arc <= len {
            return if len > 0.0 {
                from + seg * (arc / len)
            } else {
                from
            };
        }
        arc -= len;
        from = *wp;
    }
    from
}

/// True positions of the two agents and the M targets.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub k: u64,
    pub agents: [Vec3; 2],
    pub targets: Vec<Vec3>,
    /// Initial target positions, the reference for scripted motion.
    pub origins: Vec<Vec3>,
    /// Center weights `gamma_j`.
    pub gamma: Vec<f64>,
}

impl WorldState {
    pub fn new(agents: [Vec3; 2], targets: Vec<Vec3>, gamma: Vec<f64>) -> Result<Self> {
        validate_gamma(&gamma, targets.len())?;
        if !agents.iter().chain(targets.iter()).all(is_finite_vec) {
            return Err(SimError::Config("positions must be finite".into()));
        }
        Ok(Self {
            k: 0,
            agents,
            origins: targets.clone(),
            targets,
            gamma,
        })
    }

    /// Equal weights `1/M`.
    pub fn uniform_gamma(m: usize) -> Vec<f64> {
        vec![1.0 / m as f64; m]
    }

    /// Advances agent `i` (0-based) by `u`.
    pub fn step_agent(&mut self, i: usize, u: &Vec3) -> Result<()> {
        if i > 1 {
            return Err(SimError::Config(format!("agent index {i} out of range")));
        }
        if !is_finite_vec(u) {
            return Err(SimError::InvalidControl { agent: i });
        }
        self.agents[i] += u;
        Ok(())
    }

    /// Center displacement `h(k)` the scripts will emit at the current step,
    /// without advancing anything.
    pub fn scripted_center_displacement(&self, scripts: &[TargetScript]) -> Vec3 {
        scripts
            .iter()
            .zip(&self.origins)
            .zip(&self.gamma)
            .map(|((s, o), g)| s.displacement(self.k, o) * *g)
            .sum()
    }

    /// Advances every target by its scripted displacement, increments `k`, and
    /// returns the center displacement `h(k)`.
    pub fn step_targets(&mut self, scripts: &[TargetScript]) -> Result<Vec3> {
        if scripts.len() != self.targets.len() {
            return Err(SimError::Config(format!(
                "{} target scripts for {} targets",
                scripts.len(),
                self.targets.len()
            )));
        }
        let mut steps = Vec::with_capacity(scripts.len());
        for (j, (script, origin)) in scripts.iter().zip(&self.origins).enumerate() {
            let h = script.displacement(self.k, origin);
            let norm = h.norm();
            if norm > script.max_speed + SPEED_TOL {
                return Err(SimError::SpeedViolation {
                    target: j,
                    k: self.k,
                    displacement: norm,
                    max_speed: script.max_speed,
                });
            }
            steps.push(h);
        }
        let mut center_step = Vec3::zeros();
        for ((s, h), g) in self.targets.iter_mut().zip(&steps).zip(&self.gamma) {
            *s += h;
            center_step += h * *g;
        }
        self.k += 1;
        Ok(center_step)
    }

    /// `C(k) = sum_j gamma_j s_j`. Metrics only.
    pub fn true_center(&self) -> Vec3 {
        self.targets
            .iter()
            .zip(&self.gamma)
            .map(|(s, g)| s * *g)
            .sum()
    }
}

pub fn validate_gamma(gamma: &[f64], m: usize) -> Result<()> {
    if m == 0 {
        return Err(SimError::Config("at least one target is required".into()));
    }
    if gamma.len() != m {
        return Err(SimError::Config(format!(
            "{} center weights for {m} targets",
            gamma.len()
        )));
    }
    // A lone target carries the whole weight.
    let in_range = if m == 1 {
        (gamma[0] - 1.0).abs() <= GAMMA_SUM_TOL
    } else {
        gamma.iter().all(|g| *g > 0.0 && *g < 1.0)
    };
    if !in_range {
        return Err(SimError::Config(format!(
            "center weights must lie in (0, 1), got {gamma:?}"
        )));
    }
    let sum: f64 = gamma.iter().sum();
    if (sum - 1.0).abs() > GAMMA_SUM_TOL {
        return Err(SimError::Config(format!(
            "center weights must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

/// Optional additive Gaussian measurement noise. Zero std disables a channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub distance_std: f64,
    #[serde(default)]
    pub displacement_std: f64,
}

impl NoiseConfig {
    pub fn is_off(&self) -> bool {
        self.distance_std == 0.0 && self.displacement_std == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("distance_std", self.distance_std),
            ("displacement_std", self.displacement_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::Config(format!(
                    "noise {name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// What the agents sense at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFrame {
    /// Self-displacements since the previous step.
    pub w: [Vec3; 2],
    /// Agent-target distances, `l[i][j]`.
    pub l: [Vec<f64>; 2],
    /// Inter-agent distance.
    pub ell12: f64,
    pub noise_seed: u64,
}

/// Synthesizes the measurement frame for the current state. `prev_agents` are
/// the agent positions one step earlier (equal to the current ones at k = 0).
pub fn sense<R: Rng + ?Sized>(
    state: &WorldState,
    prev_agents: &[Vec3; 2],
    noise: &NoiseConfig,
    noise_seed: u64,
    rng: &mut R,
) -> MeasurementFrame {
    let dist_noise = gaussian(noise.distance_std);
    let disp_noise = gaussian(noise.displacement_std);

    let mut perturb = |d: &Option<Normal<f64>>| d.as_ref().map_or(0.0, |n| n.sample(rng));

    let mut l: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (i, row) in l.iter_mut().enumerate() {
        *row = state
            .targets
            .iter()
            .map(|s| ((state.agents[i] - s).norm() + perturb(&dist_noise)).max(0.0))
            .collect();
    }
    let mut w = [Vec3::zeros(); 2];
    for (i, wi) in w.iter_mut().enumerate() {
        let jitter = Vec3::new(
            perturb(&disp_noise),
            perturb(&disp_noise),
            perturb(&disp_noise),
        );
        *wi = state.agents[i] - prev_agents[i] + jitter;
    }
    let ell12 = ((state.agents[0] - state.agents[1]).norm() + perturb(&dist_noise)).max(0.0);
    MeasurementFrame {
        w,
        l,
        ell12,
        noise_seed,
    }
}

fn gaussian(std: f64) -> Option<Normal<f64>> {
    (std > 0.0).then(|| Normal::new(0.0, std).expect("std validated as finite and positive"))
}
