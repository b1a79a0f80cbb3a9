//! Two-agent encirclement of non-cooperative moving targets from range
//! measurements only.
//!
//! The crate is split along the estimate-control loop:
//!
//! - [`world`]: ground-truth kinematics, scripted target motion and the
//!   measurements agents are allowed to see.
//! - [`fwnn`]: fuzzy wavelet network predicting the target-center displacement.
//! - [`estimator`]: forgetting-factor least-squares estimate of the
//!   target-center position.
//! - [`controller`]: preset circular trajectory, dynamic radius and the
//!   anti-synchronization control law.
//! - [`harness`]: closed-loop scenario runner, metrics, diagnostics and trace
//!   output.

pub mod controller;
pub mod error;
pub mod estimator;
pub mod fwnn;
pub mod harness;
pub mod world;

pub use error::SimError;

/// Metric position / displacement vector.
pub type Vec3 = nalgebra::Vector3<f64>;

/// 3x3 real matrix used for covariances.
pub type Mat3 = nalgebra::Matrix3<f64>;

pub(crate) fn is_finite_vec(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}
