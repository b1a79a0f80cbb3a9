use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::scenario::{Mode, Scenario};
use crate::controller::{control, elevation_angle, preset_trajectory, radius};
use crate::error::{Result, SimError};
use crate::estimator::{psi_center, psi_j, EstimatorState};
use crate::fwnn::FwnnState;
use crate::world::{sense, WorldState};
use crate::Vec3;

/// Everything logged at one step. Errors use the true state:
/// `e = p1C + p2C`, `e1 = p1C + upsilon`, `e2 = p2C - upsilon`,
/// `e_s = C - C_hat`, `e_h = h - h_hat`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StepRecord {
    pub k: u64,
    pub x1: Vec3,
    pub x2: Vec3,
    pub targets: Vec<Vec3>,
    pub center: Vec3,
    pub c_hat: Vec3,
    pub h_hat: Vec3,
    pub radius: f64,
    pub upsilon: Vec3,
    pub u1: Vec3,
    pub u2: Vec3,
    pub e: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub e_s: Vec3,
    pub e_h: Vec3,
    /// Network residual `delta_psi - p12 . h_hat` before the weight step.
    pub residual: f64,
    /// `log10` of the covariance eigenvalues, ascending.
    pub log10_xi_eig: [f64; 3],
    pub min_agent_target: f64,
    pub ell12: f64,
    /// Angle between `p1C` and `p2C` in degrees.
    pub antipodal_deg: f64,
    pub gain: Vec3,
    pub e_out: f64,
    pub identity_residual: f64,
    pub elevation: f64,
    pub radius_clamped: bool,
    /// Agent displacement `x1 - x2` from dead reckoning.
    pub p12: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunAbort {
    Diverged { k: u64, norm: f64 },
    Failed { k: u64, error: String },
}

impl std::fmt::Display for RunAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunAbort::Diverged { k, norm } => {
                write!(f, "diverged at k = {k} (error norm {norm:.3e})")
            }
            RunAbort::Failed { k, error } => write!(f, "failed at k = {k}: {error}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub abort: Option<RunAbort>,
}

/// Angle between two vectors in degrees; zero when either vanishes.
fn angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return 0.0;
    }
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

struct Loop<'a> {
    scenario: &'a Scenario,
    world: WorldState,
    estimator: EstimatorState,
    net: FwnnState,
    rng: ChaCha8Rng,
    reckoned: [Vec3; 2],
    prev_agents: [Vec3; 2],
    prev_output: Option<(f64, Vec3)>,
}

impl Loop<'_> {
    fn step(&mut self) -> Result<StepRecord> {
        let sc = self.scenario;
        let k = self.world.k;
        let frame = sense(
            &self.world,
            &self.prev_agents,
            &sc.run.noise,
            sc.run.seed,
            &mut self.rng,
        );
        if k > 0 {
            self.reckoned[0] += frame.w[0];
            self.reckoned[1] += frame.w[1];
        }
        let [x1, x2] = self.reckoned;
        let p12 = x1 - x2;
        let psis: Vec<f64> = frame.l[0]
            .iter()
            .zip(&frame.l[1])
            .map(|(l1, l2)| psi_j(*l1, *l2, &x1, &x2))
            .collect();
        let psi = psi_center(&psis, &self.world.gamma);

        if k > 0 {
            self.estimator.step(psi, &p12, &sc.estimator)?;
        }
        let mut residual = 0.0;
        let h_hat = match sc.run.mode {
            Mode::KnownDisplacement => self.world.scripted_center_displacement(&sc.targets),
            Mode::FullLoop => match self.prev_output {
                Some((psi_prev, p12_prev)) => {
                    let delta_psi = psi - psi_prev;
                    residual = self.net.update_weights(&p12_prev, delta_psi, k)?;
                    self.net.predict(delta_psi)?
                }
                None => Vec3::zeros(),
            },
        };
        self.estimator.set_prediction(h_hat);
        self.prev_output = Some((psi, p12));

        let c_hat = self.estimator.c_hat;
        let (elevation, _) = elevation_angle(&x1, &c_hat);
        let rad = radius(&frame, &c_hat, &x1, &x2, &sc.controller)?;
        let traj = preset_trajectory(rad.radius, k, &sc.controller, elevation);
        let u1 = control(0, &x1, &c_hat, &traj.upsilon, &h_hat, &sc.controller);
        let u2 = control(1, &x2, &c_hat, &traj.upsilon, &h_hat, &sc.controller);

        let center = self.world.true_center();
        let h_true = self.world.scripted_center_displacement(&sc.targets);
        let [a1, a2] = self.world.agents;
        let p1c = a1 - center;
        let p2c = a2 - center;
        let min_agent_target = self
            .world
            .targets
            .iter()
            .flat_map(|s| [(a1 - s).norm(), (a2 - s).norm()])
            .fold(f64::INFINITY, f64::min);

        Ok(StepRecord {
            k,
            x1: a1,
            x2: a2,
            targets: self.world.targets.clone(),
            center,
            c_hat,
            h_hat,
            radius: rad.radius,
            upsilon: traj.upsilon,
            u1,
            u2,
            e: p1c + p2c,
            e1: p1c + traj.upsilon,
            e2: p2c - traj.upsilon,
            e_s: center - c_hat,
            e_h: h_true - h_hat,
            residual,
            log10_xi_eig: self.estimator.covariance.log10_eigenvalues(),
            min_agent_target,
            ell12: frame.ell12,
            antipodal_deg: angle_deg(&p1c, &p2c),
            gain: self.estimator.last_gain,
            e_out: self.estimator.last_e_out,
            identity_residual: self.estimator.last_identity_residual,
            elevation,
            radius_clamped: rad.clamped,
            p12,
        })
    }

    fn actuate(&mut self, u1: &Vec3, u2: &Vec3) -> Result<()> {
        self.prev_agents = self.world.agents;
        self.world.step_agent(0, u1)?;
        self.world.step_agent(1, u2)?;
        self.world.step_targets(&self.scenario.targets)?;
        Ok(())
    }
}

/// Runs the closed loop for `run.steps` steps. An invalid scenario is an
/// error; failures during the run end it early and are reported in
/// `abort` alongside the partial trace.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let w = &scenario.world;
    let world = WorldState::new(w.agents, w.targets.clone(), w.gamma())?;
    let mut lp = Loop {
        scenario,
        estimator: EstimatorState::new(w.c_hat0, &scenario.estimator)?,
        net: FwnnState::new(scenario.fwnn.clone()),
        rng: ChaCha8Rng::seed_from_u64(scenario.run.seed),
        reckoned: world.agents,
        prev_agents: world.agents,
        prev_output: None,
        world,
    };
    let threshold = scenario.run.divergence_threshold;
    let mut records = Vec::with_capacity(scenario.run.steps);
    let mut abort = None;
    for _ in 0..scenario.run.steps {
        let k = lp.world.k;
        let rec = match lp.step() {
            Ok(rec) => rec,
            Err(err) => {
                abort = Some(failed(k, err));
                break;
            }
        };
        let norm = [rec.e, rec.e1, rec.e2, rec.e_s]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        let (u1, u2) = (rec.u1, rec.u2);
        records.push(rec);
        if norm.is_nan() || norm > threshold {
            abort = Some(RunAbort::Diverged { k, norm });
            break;
        }
        if let Err(err) = lp.actuate(&u1, &u2) {
            abort = Some(failed(k, err));
            break;
        }
    }
    Ok(RunOutput { records, abort })
}

fn failed(k: u64, err: SimError) -> RunAbort {
    RunAbort::Failed {
        k,
        error: err.to_string(),
    }
}
