use nalgebra::{Matrix2, SymmetricEigen};
use serde::Serialize;

use super::runner::StepRecord;
use crate::{Mat3, Vec3};

/// Relative eigenvalue floor below which a window counts as rank deficient.
pub const PE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeWindow {
    pub start: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Lower bound `a_hat` from the window length, `ell12(start)` and `mu_bar`.
    pub lower_bound: f64,
    /// Upper bound `a_check`.
    pub upper_bound: f64,
    pub passed: bool,
    /// Whether `lambda_min >= lower_bound`; informational.
    pub lower_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeReport {
    pub window: usize,
    /// 2 when every `p12` lies in the ground plane, else 3.
    pub dims: usize,
    pub mu_bar: f64,
    #[serde(skip)]
    pub windows: Vec<PeWindow>,
    pub windows_checked: usize,
    pub windows_failed: usize,
    pub passed: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

pub fn p12_series(records: &[StepRecord]) -> Vec<Vec3> {
    records.iter().map(|r| r.p12).collect()
}

/// Bounds `(a_hat, a_check)` on the eigenvalues of the windowed sum.
pub fn excitation_bounds(n: usize, ell12: f64, mu_bar: f64) -> (f64, f64) {
    let n = n as f64;
    let base = n * ell12 * ell12 + n * (n - 1.0) * (2.0 * n - 1.0) / 6.0 * mu_bar * mu_bar;
    let cross = n * (n - 1.0) * ell12 * mu_bar;
    (base - cross, base + cross)
}

fn eigen_extremes(sum: &Mat3, dims: usize) -> (f64, f64) {
    let values: Vec<f64> = if dims == 2 {
        let m = Matrix2::new(sum[(0, 0)], sum[(0, 1)], sum[(1, 0)], sum[(1, 1)]);
        SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
    } else {
        SymmetricEigen::new(*sum)
            .eigenvalues
            .iter()
            .copied()
            .collect()
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Checks every window `[kappa, kappa + window - 1]` of `p12` for
/// excitation. `ell12[kappa]` is the measured inter-agent distance at the
/// window start. A window passes when the windowed sum is nonsingular
/// relative to [`PE_FLOOR`] and its largest eigenvalue stays below the
/// upper bound. Motion confined to the ground plane is assessed in that
/// plane.
pub fn persistent_excitation(p12: &[Vec3], ell12: &[f64], window: usize, mu_bar: f64) -> PeReport {
    let dims = if p12.iter().all(|p| p.z == 0.0) { 2 } else { 3 };
    let mut windows = Vec::new();
    if window > 0 && p12.len() >= window {
        for start in 0..=p12.len() - window {
            let sum: Mat3 = p12[start..start + window]
                .iter()
                .map(|p| p * p.transpose())
                .sum();
            let (lambda_min, lambda_max) = eigen_extremes(&sum, dims);
            let (lower_bound, upper_bound) = excitation_bounds(window, ell12[start], mu_bar);
            let nonsingular = lambda_min > PE_FLOOR * lambda_max.max(1.0);
            windows.push(PeWindow {
                start,
                lambda_min,
                lambda_max,
                lower_bound,
                upper_bound,
                passed: nonsingular && lambda_max <= upper_bound,
                lower_bound_holds: lambda_min >= lower_bound,
            });
        }
    }
    let passed = !windows.is_empty() && windows.iter().all(|w| w.passed);
    PeReport {
        window,
        dims,
        mu_bar,
        passed,
        windows_checked: windows.len(),
        windows_failed: windows.iter().filter(|w| !w.passed).count(),
        min_eigenvalue: windows
            .iter()
            .map(|w| w.lambda_min)
            .fold(f64::INFINITY, f64::min),
        max_eigenvalue: windows
            .iter()
            .map(|w| w.lambda_max)
            .fold(f64::NEG_INFINITY, f64::max),
        windows,
    }
}

impl PeReport {
    /// Runs the check on the trace segment `records`, with
    /// `mu_bar = |beta| (ell12(0) + 2 r_max)` from the whole trace.
    pub fn from_records(
        records: &[StepRecord],
        all: &[StepRecord],
        window: usize,
        beta: f64,
    ) -> Self {
        let ell0 = all.first().map_or(0.0, |r| r.ell12);
        let r_max = all.iter().map(|r| r.radius).fold(0.0, f64::max);
        let mu_bar = beta.abs() * (ell0 + 2.0 * r_max);
        let ell: Vec<f64> = records.iter().map(|r| r.ell12).collect();
        persistent_excitation(&p12_series(records), &ell, window, mu_bar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, period: f64, radius: f64) -> Vec<Vec3> {
        (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / period;
                Vec3::new(radius * a.cos(), radius * a.sin(), 0.0)
            })
            .collect()
    }

    #[test]
    fn stationary_agents_fail() {
        let p = vec![Vec3::new(0.0, 3.0, 0.0); 100];
        let ell = vec![3.0; 100];
        let rep = persistent_excitation(&p, &ell, 48, 1.0);
        assert!(!rep.passed);
        assert!(rep.min_eigenvalue.abs() < 1e-9);
    }

    #[test]
    fn single_step_window_fails_in_3d() {
        let p: Vec<Vec3> = (0..10).map(|k| Vec3::new(1.0, k as f64, 2.0)).collect();
        let rep = persistent_excitation(&p, &[3.0; 10], 1, 1.0);
        assert_eq!(rep.dims, 3);
        assert!(!rep.passed);
        assert!(rep.windows.iter().all(|w| !w.passed));
    }

    #[test]
    fn rotating_baseline_passes() {
        let p = circle(200, 48.0, 3.6);
        let rep = persistent_excitation(&p, &vec![3.6; 200], 48, 0.85 * (3.0 + 3.6));
        assert_eq!(rep.dims, 2);
        assert!(rep.passed);
        // a full turn of radius R gives N R^2 / 2 in each planar direction
        let expected = 48.0 * 3.6 * 3.6 / 2.0;
        assert!((rep.min_eigenvalue - expected).abs() < 1e-9 * expected);
        assert!((rep.max_eigenvalue - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn short_trace_has_no_windows() {
        let rep = persistent_excitation(&circle(10, 48.0, 1.0), &[1.0; 10], 48, 1.0);
        assert!(rep.windows.is_empty());
        assert!(!rep.passed);
    }

    #[test]
    fn bounds_match_closed_form() {
        let (lo, hi) = excitation_bounds(2, 3.0, 1.0);
        // 2*9 + 1*1 -/+ 2*3
        assert_eq!((lo, hi), (13.0, 25.0));
    }
}
