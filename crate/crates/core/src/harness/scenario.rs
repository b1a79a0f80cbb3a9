use serde::{Deserialize, Serialize};

use crate::controller::{
    derived_nu_bar, relative_control_bound, round_to_step, validate_gains, ControllerConfig,
    GainReport,
};
use crate::error::{Result, SimError};
use crate::estimator::EstimatorConfig;
use crate::fwnn::FwnnConfig;
use crate::world::{validate_gamma, NoiseConfig, TargetScript, WorldState};
use crate::{is_finite_vec, Vec3};

/// Bundled reference scenario: three targets on a line, two agents, the
/// reference gains.
pub const REFERENCE_JSON: &str = include_str!("../../scenarios/paper-sim.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    FullLoop,
    /// Feed the true center displacement to the estimator instead of the
    /// network prediction.
    KnownDisplacement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldInit {
    pub agents: [Vec3; 2],
    pub targets: Vec<Vec3>,
    /// Center weights; uniform when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    /// Initial center estimate.
    pub c_hat0: Vec3,
}

impl WorldInit {
    pub fn gamma(&self) -> Vec<f64> {
        self.gamma
            .clone()
            .unwrap_or_else(|| WorldState::uniform_gamma(self.targets.len()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub noise: NoiseConfig,
    /// Bound on the eigenvalues of `p12 p12^T` used by the learning-rate
    /// check; derived from the initial geometry when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_bar: Option<f64>,
    #[serde(default = "default_divergence")]
    pub divergence_threshold: f64,
    /// Fraction of the trace, counted from the end, used for post-transient
    /// statistics.
    #[serde(default = "default_post_fraction")]
    pub post_transient_fraction: f64,
}

fn default_divergence() -> f64 {
    1e6
}

fn default_post_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub world: WorldInit,
    pub targets: Vec<TargetScript>,
    pub fwnn: FwnnConfig,
    pub estimator: EstimatorConfig,
    pub controller: ControllerConfig,
    pub run: RunConfig,
}

impl Scenario {
    pub fn reference() -> Self {
        serde_json::from_str(REFERENCE_JSON).expect("bundled scenario parses")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.world.targets.len();
        validate_gamma(&self.world.gamma(), m)?;
        if self.targets.len() != m {
            return Err(SimError::Config(format!(
                "{} target scripts for {m} targets",
                self.targets.len()
            )));
        }
        let positions = self
            .world
            .agents
            .iter()
            .chain(&self.world.targets)
            .chain(std::iter::once(&self.world.c_hat0));
        if !positions.into_iter().all(is_finite_vec) {
            return Err(SimError::Config("world positions must be finite".into()));
        }
        for t in &self.targets {
            t.validate()?;
        }
        self.fwnn.validate()?;
        self.estimator.validate()?;
        self.controller.validate()?;
        self.run.noise.validate()?;
        if let Some(nu) = self.run.nu_bar {
            if !(nu.is_finite() && nu > 0.0) {
                return Err(SimError::Config(format!(
                    "run: nu_bar must be > 0, got {nu}"
                )));
            }
        }
        let threshold = self.run.divergence_threshold;
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(SimError::Config(
                "run: divergence_threshold must be > 0".into(),
            ));
        }
        if !(self.run.post_transient_fraction > 0.0 && self.run.post_transient_fraction <= 1.0) {
            return Err(SimError::Config(
                "run: post_transient_fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn initial_separation(&self) -> f64 {
        (self.world.agents[0] - self.world.agents[1]).norm()
    }

    /// Radius the controller would pick for the true initial geometry.
    pub fn initial_radius(&self) -> f64 {
        let gamma = self.world.gamma();
        let c: Vec3 = self
            .world
            .targets
            .iter()
            .zip(&gamma)
            .map(|(s, g)| s * *g)
            .sum();
        let far = self
            .world
            .targets
            .iter()
            .map(|s| (s.x - c.x).hypot(s.y - c.y))
            .fold(0.0, f64::max);
        round_to_step(far, self.controller.rounding_step) + self.controller.b
    }

    pub fn nu_bar(&self) -> f64 {
        self.run.nu_bar.unwrap_or_else(|| {
            derived_nu_bar(
                self.controller.beta,
                self.initial_separation(),
                self.initial_radius(),
            )
        })
    }

    /// Convergence conditions on the gains plus a warning when a target may
    /// outrun the agents.
    pub fn gain_report(&self) -> GainReport {
        let mut report =
            validate_gains(&self.controller, &self.estimator, &self.fwnn, self.nu_bar());
        let agent_bound = relative_control_bound(
            self.controller.beta,
            self.initial_separation(),
            self.initial_radius(),
        );
        for (j, t) in self.targets.iter().enumerate() {
            if t.max_speed >= agent_bound {
                report.warnings.push(format!(
                    "target {} max_speed {} is not below the agent step bound {:.4}",
                    j + 1,
                    t.max_speed,
                    agent_bound
                ));
            }
        }
        report
    }
}
