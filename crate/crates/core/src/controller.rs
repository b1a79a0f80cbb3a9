//! Anti-synchronization encirclement control.
//!
//! Agent 1 tracks `C_hat - upsilon`, agent 2 tracks `C_hat + upsilon`, where
//! `upsilon` is a circle of dynamic radius rotating at frequency `rho`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::estimator::EstimatorConfig;
use crate::fwnn::FwnnConfig;
use crate::world::MeasurementFrame;
use crate::Vec3;

/// Tolerance on `acos` arguments and on negative squared projections.
pub const GEOMETRY_TOL: f64 = 1e-9;

/// Largest per-step rotation of the preset trajectory, radians.
pub const MAX_STEP_ROTATION: f64 = 15.0 * PI / 180.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Controller gain.
    pub beta: f64,
    /// Circumnavigation frequency; the trajectory turns `rho * pi` per step.
    pub rho: f64,
    /// Safety margin added to the radius, m.
    pub b: f64,
    /// Radius quantization, m. Zero disables rounding.
    #[serde(default = "default_rounding_step")]
    pub rounding_step: f64,
}

fn default_rounding_step() -> f64 {
    1.0
}

impl ControllerConfig {
    pub fn reference() -> Self {
        Self {
            beta: -0.85,
            rho: 1.0 / 24.0,
            b: 0.8,
            rounding_step: 1.0,
        }
    }

    /// Circumnavigation period `2 / rho`, in steps.
    pub fn period(&self) -> usize {
        (2.0 / self.rho).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(SimError::Config(format!("controller: {m}")));
        if !self.beta.is_finite() {
            return fail("beta must be finite".into());
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return fail(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        if self.rho * PI >= MAX_STEP_ROTATION {
            return fail(format!(
                "rho = {} turns the trajectory {:.2} deg per step (limit 15)",
                self.rho,
                (self.rho * PI).to_degrees()
            ));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return fail(format!("b must be > 0, got {}", self.b));
        }
        if !(self.rounding_step.is_finite() && self.rounding_step >= 0.0) {
            return fail(format!(
                "rounding_step must be >= 0, got {}",
                self.rounding_step
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub upsilon: Vec3,
    pub radius: f64,
    pub elevation: f64,
}

/// Elevation of agent 1 above the estimated center, in `(-pi/2, pi/2]`.
/// The flag is set when the agent sits exactly on the center.
pub fn elevation_angle(x1: &Vec3, c_hat: &Vec3) -> (f64, bool) {
    let dz = x1.z - c_hat.z;
    let horiz = (x1.x - c_hat.x).hypot(x1.y - c_hat.y);
    if dz == 0.0 && horiz == 0.0 {
        return (0.0, true);
    }
    (dz.atan2(horiz), false)
}

pub fn preset_trajectory(
    radius: f64,
    k: u64,
    cfg: &ControllerConfig,
    elevation: f64,
) -> TrajectoryPoint {
    let phase = cfg.rho * k as f64 * PI;
    let (s, c) = phase.sin_cos();
    TrajectoryPoint {
        upsilon: Vec3::new(
            radius * s * elevation.cos(),
            radius * c,
            radius * c * elevation.sin(),
        ),
        radius,
        elevation,
    }
}

/// Rounds to the nearest multiple of `step`.
pub fn round_to_step(x: f64, step: f64) -> f64 {
    if step > 0.0 {
        (x / step).round() * step
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusOutcome {
    pub radius: f64,
    /// Largest projected target distance from the estimated center, before
    /// rounding.
    pub max_distance: f64,
    /// Set when a projection or an `acos` argument had to be clamped beyond
    /// [`GEOMETRY_TOL`].
    pub clamped: bool,
}

/// Angle between the sides `adj_a` and `adj_b` of a triangle whose third
/// side is `opposite`; the same value as
/// `acos((adj_a^2 + adj_b^2 - opposite^2) / (2 adj_a adj_b))`, evaluated with
/// Kahan's formula so that needle-like triangles keep full accuracy. Side
/// lengths that violate the triangle inequality clamp to 0 or pi, and set
/// `clamped` when the cosine argument leaves [-1, 1] by more than
/// [`GEOMETRY_TOL`].
fn triangle_angle(adj_a: f64, adj_b: f64, opposite: f64, clamped: &mut bool) -> f64 {
    if adj_a == 0.0 || adj_b == 0.0 {
        return 0.0;
    }
    let cos_arg = (adj_a * adj_a + adj_b * adj_b - opposite * opposite) / (2.0 * adj_a * adj_b);
    if cos_arg.abs() > 1.0 + GEOMETRY_TOL {
        *clamped = true;
    }
    let (a, b) = if adj_a >= adj_b {
        (adj_a, adj_b)
    } else {
        (adj_b, adj_a)
    };
    let c = opposite;
    let mu = if b >= c { c - (a - b) } else { b - (a - c) };
    let num = ((a - b) + c) * mu;
    let den = (a + (b + c)) * ((a - c) + b);
    if num <= 0.0 {
        0.0
    } else if den <= 0.0 {
        PI
    } else {
        2.0 * (num / den).sqrt().atan()
    }
}

/// Third side from two sides and the included angle, written as
/// `(a - b)^2 + 4 a b sin^2(angle / 2)` to avoid cancellation.
fn law_of_cosines(a: f64, b: f64, angle: f64) -> f64 {
    let half = (0.5 * angle).sin();
    ((a - b) * (a - b) + 4.0 * a * b * half * half).sqrt()
}

/// Dynamic radius from the ground-projected law-of-cosines geometry seen from
/// agent 2: the farthest projected target distance from `c_hat`, rounded to
/// `rounding_step`, plus the margin `b`.
///
/// Distances alone cannot tell which side of the agent baseline a target is
/// on; the unsigned angles assume targets and `c_hat` share a side (or that
/// `c_hat` lies on the baseline, as it does once the agents are antipodal).
pub fn radius(
    meas: &MeasurementFrame,
    c_hat: &Vec3,
    x1: &Vec3,
    x2: &Vec3,
    cfg: &ControllerConfig,
) -> Result<RadiusOutcome> {
    let planar = |a: &Vec3, b: &Vec3| (a.x - b.x).hypot(a.y - b.y);
    let l1c = planar(x1, c_hat);
    let l2c = planar(x2, c_hat);
    let baseline = planar(x1, x2);
    if baseline == 0.0 {
        return Err(SimError::Geometry(
            "agents coincide in the ground projection".into(),
        ));
    }
    let mut clamped = false;
    let dz = x2.z - c_hat.z;
    let mut project = |l: f64| {
        let sq = l * l - dz * dz;
        if sq < -GEOMETRY_TOL {
            clamped = true;
        }
        sq.max(0.0).sqrt()
    };
    let projected: Vec<(f64, f64)> = meas.l[0]
        .iter()
        .zip(&meas.l[1])
        .map(|(l1, l2)| (project(*l1), project(*l2)))
        .collect();

    // angles at agent 2 between agent 1 and the center / each target
    let theta_c = triangle_angle(l2c, baseline, l1c, &mut clamped);
    let mut max_distance = 0.0f64;
    for (l1j, l2j) in projected {
        let theta_j = triangle_angle(l2j, baseline, l1j, &mut clamped);
        max_distance = max_distance.max(law_of_cosines(l2j, l2c, theta_c - theta_j));
    }
    Ok(RadiusOutcome {
        radius: round_to_step(max_distance, cfg.rounding_step) + cfg.b,
        max_distance,
        clamped,
    })
}

/// Control for agent `agent` (0 = agent 1, 1 = agent 2):
/// `beta * (x_i - c_hat +/- upsilon) + h_hat`.
pub fn control(
    agent: usize,
    x_i: &Vec3,
    c_hat: &Vec3,
    upsilon: &Vec3,
    h_hat: &Vec3,
    cfg: &ControllerConfig,
) -> Vec3 {
    let sign = if agent == 0 { 1.0 } else { -1.0 };
    (x_i - c_hat + upsilon * sign) * cfg.beta + h_hat
}

/// Bound on `||u1 - u2||` from the initial separation and the largest radius.
pub fn relative_control_bound(beta: f64, ell12_0: f64, r_max: f64) -> f64 {
    beta.abs() * (ell12_0 + 2.0 * r_max)
}

/// Bound on `||p12||^2` for `0 < |1 + beta| < 1`, from
/// `p12(k+1) = (1 + beta) p12(k) + 2 beta upsilon(k)`.
pub fn derived_nu_bar(beta: f64, ell12_0: f64, r_max: f64) -> f64 {
    let contraction = 1.0 - (1.0 + beta).abs();
    let steady = if contraction > 0.0 {
        2.0 * beta.abs() * r_max / contraction
    } else {
        f64::INFINITY
    };
    ell12_0.max(steady).powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCheck {
    pub name: String,
    pub condition: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
    /// Distance to the nearest bound, negative when violated.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub nu_bar: f64,
    pub checks: Vec<GainCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl GainReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for GainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gain validation (nu_bar = {})", self.nu_bar)?;
        for c in &self.checks {
            writeln!(
                f,
                "  [{}] {:<22} {:<28} value = {:<10} margin = {:.6}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.condition,
                c.value,
                c.margin
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        Ok(())
    }
}

fn interval_check(
    name: &str,
    condition: String,
    value: f64,
    lower: f64,
    upper: f64,
    upper_inclusive: bool,
) -> GainCheck {
    let passed = value > lower
        && if upper_inclusive {
            value <= upper
        } else {
            value < upper
        };
    GainCheck {
        name: name.into(),
        condition,
        value,
        lower,
        upper,
        passed,
        margin: (value - lower).min(upper - value),
    }
}

/// Checks the learning-rate, forgetting-factor and controller-gain conditions
/// that guarantee convergence of the prediction, estimation and AS errors.
pub fn validate_gains(
    ctrl: &ControllerConfig,
    est: &EstimatorConfig,
    fwnn: &FwnnConfig,
    nu_bar: f64,
) -> GainReport {
    let inv_sqrt3 = 1.0 / 3f64.sqrt();
    let checks = vec![
        interval_check(
            "learning_rate",
            format!("0 < alpha < 2/nu_bar = {:.4}", 2.0 / nu_bar),
            fwnn.learning_rate,
            0.0,
            2.0 / nu_bar,
            false,
        ),
        interval_check(
            "forgetting",
            "0 < vartheta1 < 1/2".into(),
            est.forgetting,
            0.0,
            0.5,
            false,
        ),
        interval_check(
            "beta",
            format!("{:.4} < beta <= {:.4}", -inv_sqrt3 - 1.0, inv_sqrt3 - 1.0),
            ctrl.beta,
            -inv_sqrt3 - 1.0,
            inv_sqrt3 - 1.0,
            true,
        ),
    ];
    GainReport {
        nu_bar,
        checks,
        warnings: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn frame(l1: Vec<f64>, l2: Vec<f64>) -> MeasurementFrame {
        MeasurementFrame {
            w: [Vec3::zeros(); 2],
            l: [l1, l2],
            ell12: 0.0,
            noise_seed: 0,
        }
    }

    fn frame_from(x1: &Vec3, x2: &Vec3, targets: &[Vec3]) -> MeasurementFrame {
        frame(
            targets.iter().map(|s| (x1 - s).norm()).collect(),
            targets.iter().map(|s| (x2 - s).norm()).collect(),
        )
    }

    #[test]
    fn elevation_examples() {
        let c = Vec3::new(1.0, 2.0, 0.5);
        assert_eq!(
            elevation_angle(&Vec3::new(4.0, -1.0, 0.5), &c),
            (0.0, false)
        );
        let (a, _) = elevation_angle(&Vec3::new(1.0, 2.0, 3.0), &c);
        assert!((a - PI / 2.0).abs() < 1e-15);
        let (a, _) = elevation_angle(&Vec3::new(4.0, 6.0, 5.5), &c);
        assert!((a - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(elevation_angle(&c, &c), (0.0, true));
    }

    #[test]
    fn trajectory_examples() {
        let cfg = ControllerConfig::reference();
        let p = preset_trajectory(2.0, 0, &cfg, 0.0);
        assert_eq!(p.upsilon, Vec3::new(0.0, 2.0, 0.0));
        // rho * k = 1
        let p = preset_trajectory(2.0, 24, &cfg, 0.0);
        assert!((p.upsilon - Vec3::new(0.0, -2.0, 0.0)).norm() < 1e-14);
        // rho * k * pi = pi / 2
        let p = preset_trajectory(1.0, 12, &cfg, FRAC_PI_4);
        assert!((p.upsilon - Vec3::new(FRAC_PI_4.cos(), 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn trajectory_norm_identity() {
        let cfg = ControllerConfig::reference();
        for k in 0..200u64 {
            let elev = (k as f64 * 0.01).sin();
            let p = preset_trajectory(1.8, k, &cfg, elev);
            let phase = cfg.rho * k as f64 * PI;
            let expected = 1.8 * (1.0 + elev.sin().powi(2) * (2.0 * phase).cos()).sqrt();
            assert!((p.upsilon.norm() - expected).abs() < 1e-12);
            let planar = preset_trajectory(1.8, k, &cfg, 0.0);
            assert!((planar.upsilon.norm() - 1.8).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_target_at_center_gives_margin() {
        let cfg = ControllerConfig::reference();
        let c = Vec3::new(2.0, 0.0, 0.5);
        let x1 = Vec3::new(2.0, 2.0, 0.5);
        let x2 = Vec3::new(2.5, -1.5, 0.5);
        let out = radius(&frame_from(&x1, &x2, &[c]), &c, &x1, &x2, &cfg).unwrap();
        assert!(out.max_distance < 1e-7);
        assert_eq!(out.radius, 0.8);
        assert!(!out.clamped);
    }

    #[test]
    fn radius_reference_start() {
        let cfg = ControllerConfig::reference();
        let x1 = Vec3::new(0.0, 3.0, 0.5);
        let x2 = Vec3::new(0.0, 6.0, 0.5);
        let targets = [
            Vec3::new(1.0, 0.0, 0.5),
            Vec3::new(2.0, 0.0, 0.5),
            Vec3::new(3.0, 0.0, 0.5),
        ];
        let c = Vec3::new(2.0, 0.0, 0.5);
        let out = radius(&frame_from(&x1, &x2, &targets), &c, &x1, &x2, &cfg).unwrap();
        assert!((out.max_distance - 1.0).abs() < 1e-9);
        assert!((out.radius - 1.8).abs() < 1e-12);
    }

    #[test]
    fn radius_rejects_coincident_projection() {
        let cfg = ControllerConfig::reference();
        let x = Vec3::new(1.0, 1.0, 0.0);
        let x2 = Vec3::new(1.0, 1.0, 2.0);
        let err = radius(&frame(vec![1.0], vec![1.0]), &Vec3::zeros(), &x, &x2, &cfg);
        assert!(matches!(err, Err(SimError::Geometry(_))));
    }

    #[test]
    fn radius_flags_inconsistent_projection() {
        let cfg = ControllerConfig::reference();
        let x1 = Vec3::new(0.0, 1.0, 0.0);
        let x2 = Vec3::new(0.0, -1.0, 3.0);
        // l < |z2 - c_z| cannot be projected
        let out = radius(&frame(vec![2.0], vec![1.0]), &Vec3::zeros(), &x1, &x2, &cfg).unwrap();
        assert!(out.clamped);
        assert!(out.radius >= cfg.b);
    }

    #[test]
    fn farther_target_never_shrinks_radius() {
        let cfg = ControllerConfig::reference();
        let x1 = Vec3::new(0.0, 3.0, 0.0);
        let x2 = Vec3::new(0.0, -3.0, 0.0);
        let c = Vec3::zeros();
        let mut targets = vec![Vec3::new(0.5, 0.2, 0.0), Vec3::new(-0.3, 0.4, 0.0)];
        let base = radius(&frame_from(&x1, &x2, &targets), &c, &x1, &x2, &cfg).unwrap();
        targets.push(Vec3::new(2.2, 0.1, 0.0));
        let more = radius(&frame_from(&x1, &x2, &targets), &c, &x1, &x2, &cfg).unwrap();
        assert!(more.radius >= base.radius);
        assert!(more.max_distance > base.max_distance);
    }

    #[test]
    fn control_examples() {
        let cfg = ControllerConfig::reference();
        let c = Vec3::new(1.0, 1.0, 0.0);
        let ups = Vec3::new(0.0, 2.0, 0.0);
        let h = Vec3::new(0.01, -0.02, 0.0);
        // p1C = -upsilon
        assert_eq!(control(0, &(c - ups), &c, &ups, &h, &cfg), h);

        let u2 = control(1, &(c + Vec3::x()), &c, &ups, &Vec3::zeros(), &cfg);
        assert!((u2 - Vec3::new(-0.85, 1.7, 0.0)).norm() < 1e-15);

        let h = Vec3::new(0.1, 0.0, 0.0);
        assert_eq!(control(0, &(c - ups), &c, &ups, &h, &cfg), h);
        assert_eq!(control(1, &(c + ups), &c, &ups, &h, &cfg), h);
    }

    #[test]
    fn reference_gains_pass() {
        let r = validate_gains(
            &ControllerConfig::reference(),
            &EstimatorConfig::reference(),
            &FwnnConfig::reference(),
            5.8726,
        );
        assert!(r.all_passed(), "{r}");
        assert!((2.0_f64 / 5.8726 - 0.3406).abs() < 1e-4);
        assert!((r.checks[2].lower + 1.5774).abs() < 1e-4);
        assert!((r.checks[2].upper + 0.4226).abs() < 1e-4);
    }

    #[test]
    fn gain_boundaries_fail() {
        let est = EstimatorConfig::reference();
        let fwnn = FwnnConfig::reference();
        let zero_beta = ControllerConfig {
            beta: 0.0,
            ..ControllerConfig::reference()
        };
        let r = validate_gains(&zero_beta, &est, &fwnn, 5.8726);
        assert!(!r.checks[2].passed && r.checks[0].passed && r.checks[1].passed);

        let half = EstimatorConfig {
            forgetting: 0.5,
            ..EstimatorConfig::reference()
        };
        let r = validate_gains(&ControllerConfig::reference(), &half, &fwnn, 5.8726);
        assert!(!r.checks[1].passed);
        assert!(!r.all_passed());

        let inclusive = ControllerConfig {
            beta: 1.0 / 3f64.sqrt() - 1.0,
            ..ControllerConfig::reference()
        };
        assert!(validate_gains(&inclusive, &est, &fwnn, 5.8726).checks[2].passed);
    }

    #[test]
    fn nu_bar_bound_covers_steady_state() {
        // beta in (-1, 0): steady |p12| <= 2 r
        assert!((derived_nu_bar(-0.85, 3.0, 1.8) - 12.96).abs() < 1e-12);
        assert_eq!(derived_nu_bar(0.2, 3.0, 1.8), f64::INFINITY);
        assert!((relative_control_bound(-0.85, 3.0, 1.8) - 0.85 * 6.6).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(ControllerConfig::reference().validate().is_ok());
        let fast = ControllerConfig {
            rho: 0.1,
            ..ControllerConfig::reference()
        };
        assert!(fast.validate().is_err());
        let no_margin = ControllerConfig {
            b: 0.0,
            ..ControllerConfig::reference()
        };
        assert!(no_margin.validate().is_err());
        assert_eq!(ControllerConfig::reference().period(), 48);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2_000))]
        #[test]
        fn law_of_cosines_matches_planar_distance(
            ax in -10f64..10.0, ay in -10f64..10.0,
            bx in -10f64..10.0, by in -10f64..10.0,
            t in 0f64..1.0,
            off in 0.05f64..8.0, along in -8f64..8.0,
            z in -2f64..2.0,
        ) {
            let x1 = Vec3::new(ax, ay, z);
            let x2 = Vec3::new(bx, by, z);
            let base = x1 - x2;
            prop_assume!(base.norm() > 0.1);
            // center on the baseline, target on either side of it
            let c = x2 + base * t;
            let normal = Vec3::new(-base.y, base.x, 0.0).normalize();
            let s = c + base.normalize() * along + normal * off;
            let out = radius(
                &frame_from(&x1, &x2, &[s]), &c, &x1, &x2,
                &ControllerConfig { rounding_step: 0.0, ..ControllerConfig::reference() },
            ).unwrap();
            let direct = (s.x - c.x).hypot(s.y - c.y);
            prop_assert!((out.max_distance - direct).abs() < 1e-6);
            prop_assert!(out.radius >= 0.8);
        }
    }
}
