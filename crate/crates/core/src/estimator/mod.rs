//! Range-only estimate of the target-center position.
//!
//! Distance differences between the two agents give a scalar output `psi`
//! that is linear in the unknown center; a forgetting-factor least-squares
//! recursion corrects a dead-reckoned prediction (previous estimate plus the
//! predicted center displacement) along the measured direction `p12`.

mod covariance;

pub use covariance::{Covariance, MIN_EIGENVALUE};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SimError};
use crate::{is_finite_vec, Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Exponential forgetting factor.
    pub forgetting: f64,
    /// New-information utilization factor.
    pub utilization: f64,
    /// Initial covariance, row-major.
    #[serde(
        default = "default_initial_covariance",
        serialize_with = "ser_rows",
        deserialize_with = "de_rows"
    )]
    pub initial_covariance: Mat3,
}

fn default_initial_covariance() -> Mat3 {
    Mat3::identity() * 100.0
}

fn ser_rows<S: Serializer>(m: &Mat3, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]));
    rows.serialize(s)
}

fn de_rows<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Mat3, D::Error> {
    let rows = <[[f64; 3]; 3]>::deserialize(d)?;
    Ok(Mat3::from_fn(|i, j| rows[i][j]))
}

impl EstimatorConfig {
    pub fn reference() -> Self {
        Self {
            forgetting: 0.1,
            utilization: 0.95,
            initial_covariance: default_initial_covariance(),
        }
    }

    /// Structural checks. The stability gate on `forgetting` is reported by
    /// [`crate::controller::validate_gains`] instead.
    pub fn validate(&self) -> Result<()> {
        if !(self.forgetting > 0.0 && self.forgetting <= 1.0) {
            return Err(SimError::Config(format!(
                "estimator: forgetting must lie in (0, 1], got {}",
                self.forgetting
            )));
        }
        if !(self.utilization > 0.0 && self.utilization <= 1.0) {
            return Err(SimError::Config(format!(
                "estimator: utilization must lie in (0, 1], got {}",
                self.utilization
            )));
        }
        Covariance::from_matrix(&self.initial_covariance)
            .map(|_| ())
            .map_err(|e| SimError::Config(format!("estimator: initial_covariance: {e}")))
    }
}

/// Output variable for target `j`: `-(l1j^2 - l2j^2 - x1.x1 + x2.x2) / 2`,
/// which equals `p12 . s_j` for exact distances.
pub fn psi_j(l1j: f64, l2j: f64, x1: &Vec3, x2: &Vec3) -> f64 {
    -0.5 * (l1j * l1j - l2j * l2j - x1.dot(x1) + x2.dot(x2))
}

/// `sum_j gamma_j psi_j`.
pub fn psi_center(psis: &[f64], gamma: &[f64]) -> f64 {
    debug_assert_eq!(psis.len(), gamma.len());
    psis.iter().zip(gamma).map(|(p, g)| p * g).sum()
}

/// Plain-matrix form of the covariance recursion.
pub fn covariance_update(xi_prev: &Mat3, p12: &Vec3, cfg: &EstimatorConfig) -> Result<Mat3> {
    let cov = Covariance::from_matrix(xi_prev)?;
    let (next, _) = cov.update(p12, cfg.forgetting, cfg.utilization)?;
    Ok(next.to_matrix())
}

/// `xi(k-1) p12 / (forgetting * utilization + p12^T xi(k-1) p12)`.
pub fn gain(xi_prev: &Mat3, p12: &Vec3, cfg: &EstimatorConfig) -> Vec3 {
    let v = xi_prev * p12;
    v / (cfg.forgetting * cfg.utilization + p12.dot(&v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub c_hat: Vec3,
    pub covariance: Covariance,
    /// Center displacement predicted at the previous step.
    pub prev_h_hat: Vec3,
    pub prev_c_hat: Vec3,
    pub last_gain: Vec3,
    pub last_e_out: f64,
    /// Residual of `I - K p12^T = forgetting * xi(k) xi(k-1)^-1` at the last
    /// update.
    pub last_identity_residual: f64,
}

impl EstimatorState {
    pub fn new(c_hat0: Vec3, cfg: &EstimatorConfig) -> Result<Self> {
        if !is_finite_vec(&c_hat0) {
            return Err(SimError::Config(
                "initial center estimate must be finite".into(),
            ));
        }
        Ok(Self {
            c_hat: c_hat0,
            covariance: Covariance::from_matrix(&cfg.initial_covariance)?,
            prev_h_hat: Vec3::zeros(),
            prev_c_hat: c_hat0,
            last_gain: Vec3::zeros(),
            last_e_out: 0.0,
            last_identity_residual: 0.0,
        })
    }

    /// Prediction of the current output, `p12 . (C_hat(k-1) + h_hat(k-1))`.
    pub fn predicted_output(&self, p12: &Vec3) -> f64 {
        p12.dot(&(self.c_hat + self.prev_h_hat))
    }

    /// Consumes the current output `psi` and direction `p12`.
    pub fn step(&mut self, psi: f64, p12: &Vec3, cfg: &EstimatorConfig) -> Result<()> {
        let predicted = self.c_hat + self.prev_h_hat;
        let e_out = psi - p12.dot(&predicted);
        let (next, k_s) = self
            .covariance
            .update(p12, cfg.forgetting, cfg.utilization)?;
        self.last_identity_residual =
            next.identity_residual(&self.covariance, &k_s, p12, cfg.forgetting);
        self.prev_c_hat = self.c_hat;
        self.c_hat = predicted + k_s * e_out;
        self.covariance = next;
        self.last_gain = k_s;
        self.last_e_out = e_out;
        Ok(())
    }

    /// Stores `h_hat(k)` for use at the next step.
    pub fn set_prediction(&mut self, h_hat: Vec3) {
        self.prev_h_hat = h_hat;
    }
}

/// `C - C_hat`.
pub fn estimation_error(state: &EstimatorState, truth: &Vec3) -> Vec3 {
    truth - state.c_hat
}
