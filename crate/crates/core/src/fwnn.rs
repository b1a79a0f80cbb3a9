//! Fuzzy wavelet neural network predicting the target-center displacement.
//!
//! The scalar input `delta_psi` is spread into `set_size` shifted variables,
//! fuzzified by Gaussian membership grades, normalized into a rule basis and
//! combined with per-rule output weights scaled by a mother wavelet.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::Vec3;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Wavelet {
    /// `-(0.001 x - 0.001) exp(-0.5 (0.001 x - 0.001)^2)`.
    #[default]
    Standard,
    /// `-(scale x + shift) exp(-0.5 (scale x + shift)^2)`.
    CustomCoefficients { scale: f64, shift: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FwnnConfig {
    /// Number of fuzzy rules `l`.
    pub rules: usize,
    /// Fuzzy-set size `nu`.
    pub set_size: usize,
    /// Gaussian spread.
    pub spread: f64,
    /// Input offset `sigma`.
    pub offset: f64,
    /// Input spacing `varrho`.
    pub spacing: f64,
    pub learning_rate: f64,
    #[serde(default)]
    pub wavelet: Wavelet,
    /// Per-rule membership centers; empty means every rule is centered at 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rule_centers: Vec<f64>,
}

impl FwnnConfig {
    pub fn reference() -> Self {
        Self {
            rules: 1,
            set_size: 5,
            spread: 128.0,
            offset: 9.0,
            spacing: 3.0,
            learning_rate: 0.01,
            wavelet: Wavelet::Standard,
            rule_centers: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(SimError::Config(format!("fwnn: {msg}")));
        if self.rules < 1 {
            return fail("rules must be >= 1".into());
        }
        if self.set_size < 1 {
            return fail("set_size must be >= 1".into());
        }
        if !(self.spread.is_finite() && self.spread > 0.0) {
            return fail(format!("spread must be > 0, got {}", self.spread));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return fail(format!(
                "learning_rate must lie in (0, 1), got {}",
                self.learning_rate
            ));
        }
        if !(self.offset.is_finite() && self.spacing.is_finite()) {
            return fail("offset and spacing must be finite".into());
        }
        if !self.rule_centers.is_empty() && self.rule_centers.len() != self.rules {
            return fail(format!(
                "{} rule centers for {} rules",
                self.rule_centers.len(),
                self.rules
            ));
        }
        if let Wavelet::CustomCoefficients { scale, shift } = self.wavelet {
            if !(scale.is_finite() && shift.is_finite()) {
                return fail("wavelet coefficients must be finite".into());
            }
        }
        Ok(())
    }

    fn rule_center(&self, rule: usize) -> f64 {
        self.rule_centers.get(rule).copied().unwrap_or(0.0)
    }
}

/// `theta_i = delta_psi - offset + spacing * i` for `i = 1..=set_size`.
pub fn input_variables(delta_psi: f64, cfg: &FwnnConfig) -> Vec<f64> {
    (1..=cfg.set_size)
        .map(|i| delta_psi - cfg.offset + cfg.spacing * i as f64)
        .collect()
}

/// Gaussian membership grade `exp(-theta^2 / (2 spread^2))`.
pub fn membership(theta: f64, spread: f64) -> f64 {
    (-theta * theta / (2.0 * spread * spread)).exp()
}

/// Normalized rule basis. Products of memberships are accumulated in the log
/// domain so that far-out inputs do not underflow every rule to zero.
pub fn fuzzy_basis(thetas: &[f64], cfg: &FwnnConfig) -> Result<Vec<f64>> {
    let two_var = 2.0 * cfg.spread * cfg.spread;
    let log_products: Vec<f64> = (0..cfg.rules)
        .map(|rule| {
            let c = cfg.rule_center(rule);
            thetas.iter().map(|t| -(t - c) * (t - c) / two_var).sum()
        })
        .collect();
    let peak = log_products
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(SimError::DegenerateBasis {
            delta_psi: thetas.first().copied().unwrap_or(f64::NAN),
        });
    }
    let weights: Vec<f64> = log_products.iter().map(|lp| (lp - peak).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Mother wavelet `eta` as a function of the network input.
pub fn mother_wavelet(delta_psi: f64, cfg: &FwnnConfig) -> f64 {
    let (scale, shift) = match cfg.wavelet {
        Wavelet::Standard => (0.001, -0.001),
        Wavelet::CustomCoefficients { scale, shift } => (scale, shift),
    };
    let t = scale * delta_psi + shift;
    -t * (-0.5 * t * t).exp()
}

/// Gradient step on the output weights for a given residual, wavelet value
/// and rule basis: `alpha * residual * p12 * eta * basis_i`.
pub fn weight_increment(
    learning_rate: f64,
    residual: f64,
    p12: &Vec3,
    eta: f64,
    basis: &[f64],
) -> Vec<Vec3> {
    basis
        .iter()
        .map(|b| p12 * (learning_rate * residual * eta * b))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwnnState {
    pub config: FwnnConfig,
    pub weights: Vec<Vec3>,
    pub last_prediction: Vec3,
}

impl FwnnState {
    /// Zero-initialized weights.
    pub fn new(config: FwnnConfig) -> Self {
        let weights = vec![Vec3::zeros(); config.rules];
        Self {
            config,
            weights,
            last_prediction: Vec3::zeros(),
        }
    }

    fn evaluate(&self, delta_psi: f64) -> Result<(Vec3, f64, Vec<f64>)> {
        let basis = fuzzy_basis(&input_variables(delta_psi, &self.config), &self.config)
            .map_err(|_| SimError::DegenerateBasis { delta_psi })?;
        let eta = mother_wavelet(delta_psi, &self.config);
        let out = self
            .weights
            .iter()
            .zip(&basis)
            .map(|(w, b)| w * *b)
            .sum::<Vec3>()
            * eta;
        Ok((out, eta, basis))
    }

    /// Network output for `delta_psi`, cached in `last_prediction`.
    pub fn predict(&mut self, delta_psi: f64) -> Result<Vec3> {
        let (h_hat, _, _) = self.evaluate(delta_psi)?;
        self.last_prediction = h_hat;
        Ok(h_hat)
    }

    /// Value function `J = residual^2 / 2` at the current weights.
    pub fn cost(&self, p12: &Vec3, delta_psi: f64) -> Result<f64> {
        let (h_hat, _, _) = self.evaluate(delta_psi)?;
        let r = delta_psi - p12.dot(&h_hat);
        Ok(0.5 * r * r)
    }

    /// One gradient-descent step on `J` for the pair (`delta_psi`, `p12`).
    /// Returns the residual `delta_psi - p12 . h_hat` measured before the
    /// step. `k` only labels the error.
    pub fn update_weights(&mut self, p12: &Vec3, delta_psi: f64, k: u64) -> Result<f64> {
        let (h_hat, eta, basis) = self.evaluate(delta_psi)?;
        let residual = delta_psi - p12.dot(&h_hat);
        if !residual.is_finite() {
            return Err(SimError::AdaptationDiverged { k, residual });
        }
        let inc = weight_increment(self.config.learning_rate, residual, p12, eta, &basis);
        for (w, d) in self.weights.iter_mut().zip(inc) {
            *w += d;
        }
        if !self.weights.iter().all(crate::is_finite_vec) {
            return Err(SimError::AdaptationDiverged { k, residual });
        }
        Ok(residual)
    }

    /// `||p12||^2 eta^2 sum(basis^2)`, the per-step contraction quantity of the
    /// residual recursion under constant input.
    pub fn excitation_factor(&self, p12: &Vec3, delta_psi: f64) -> Result<f64> {
        let (_, eta, basis) = self.evaluate(delta_psi)?;
        Ok(p12.norm_squared() * eta * eta * basis.iter().map(|b| b * b).sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn input_variable_examples() {
        let cfg = FwnnConfig::reference();
        assert_eq!(input_variables(9.0, &cfg), vec![3.0, 6.0, 9.0, 12.0, 15.0]);
        assert_eq!(input_variables(0.0, &cfg), vec![-6.0, -3.0, 0.0, 3.0, 6.0]);
        let single = FwnnConfig {
            set_size: 1,
            ..FwnnConfig::reference()
        };
        assert_eq!(input_variables(2.5, &single), vec![2.5 - 9.0 + 3.0]);
    }

    #[test]
    fn membership_examples() {
        assert_eq!(membership(0.0, 128.0), 1.0);
        assert!(close(membership(128.0, 128.0), (-0.5f64).exp(), 1e-15));
        assert!(close(membership(2.0, 2.0), 0.60653, 1e-5));
        let mut prev = 1.0;
        for t in [1.0, 10.0, 100.0, 1e3, 1e4] {
            let m = membership(t, 128.0);
            assert!(m < prev && m == membership(-t, 128.0));
            prev = m;
        }
        assert!(membership(1e6, 128.0) < 1e-300);
    }

    #[test]
    fn single_rule_basis_is_one() {
        let cfg = FwnnConfig::reference();
        for dp in [-1e9, -3.0, 0.0, 17.0, 1e12] {
            assert_eq!(
                fuzzy_basis(&input_variables(dp, &cfg), &cfg).unwrap(),
                vec![1.0]
            );
        }
    }

    #[test]
    fn identical_rules_split_evenly() {
        let cfg = FwnnConfig {
            rules: 2,
            ..FwnnConfig::reference()
        };
        let b = fuzzy_basis(&[1.0, 2.0, 3.0], &cfg).unwrap();
        assert_eq!(b, vec![0.5, 0.5]);
    }

    #[test]
    fn two_rule_basis_matches_direct_products() {
        let cfg = FwnnConfig {
            rules: 2,
            set_size: 3,
            spread: 4.0,
            rule_centers: vec![0.0, 2.5],
            ..FwnnConfig::reference()
        };
        let thetas = [0.5, -1.0, 3.0];
        // brute force: product of memberships per rule
        let p: Vec<f64> = [0.0, 2.5]
            .iter()
            .map(|c| thetas.iter().map(|t| membership(t - c, 4.0)).product())
            .collect();
        let b = fuzzy_basis(&thetas, &cfg).unwrap();
        assert!(close(b[0], p[0] / (p[0] + p[1]), 1e-14));
        assert!(close(b[1], p[1] / (p[0] + p[1]), 1e-14));
    }

    #[test]
    fn basis_rejects_non_finite_input() {
        let cfg = FwnnConfig::reference();
        assert!(matches!(
            fuzzy_basis(&[f64::NAN], &cfg),
            Err(SimError::DegenerateBasis { .. })
        ));
        let mut net = FwnnState::new(cfg);
        assert!(matches!(
            net.predict(f64::INFINITY),
            Err(SimError::DegenerateBasis { .. })
        ));
    }

    #[test]
    fn far_inputs_do_not_underflow() {
        let cfg = FwnnConfig {
            rules: 3,
            rule_centers: vec![-1.0, 0.0, 1.0],
            ..FwnnConfig::reference()
        };
        let b = fuzzy_basis(&input_variables(1e5, &cfg), &cfg).unwrap();
        assert!(close(b.iter().sum::<f64>(), 1.0, 1e-12));
        assert!(b[2] > b[1] && b[1] > b[0]);
    }

    #[test]
    fn wavelet_examples() {
        let cfg = FwnnConfig::reference();
        assert_eq!(mother_wavelet(1.0, &cfg), 0.0);
        assert!(close(mother_wavelet(1001.0, &cfg), -(-0.5f64).exp(), 1e-12));
        assert!(close(mother_wavelet(-999.0, &cfg), 0.60653, 1e-5));
        let custom = FwnnConfig {
            wavelet: Wavelet::CustomCoefficients {
                scale: 1.0,
                shift: 0.0,
            },
            ..FwnnConfig::reference()
        };
        assert!(close(mother_wavelet(1.0, &custom), -(-0.5f64).exp(), 1e-15));
    }

    #[test]
    fn prediction_examples() {
        let mut net = FwnnState::new(FwnnConfig::reference());
        assert_eq!(net.predict(1001.0).unwrap(), Vec3::zeros());

        net.weights[0] = Vec3::new(1.0, -2.0, 0.5);
        let eta = mother_wavelet(1001.0, &net.config);
        let h = net.predict(1001.0).unwrap();
        assert!((h - net.weights[0] * eta).norm() < 1e-15);
        assert_eq!(net.last_prediction, h);
    }

    #[test]
    fn weighted_sum_hand_example() {
        // l = 2, weights e_x and e_y, basis (0.3, 0.7), eta = 0.5
        let weights = [Vec3::x(), Vec3::y()];
        let basis = [0.3, 0.7];
        let h: Vec3 = weights.iter().zip(basis).map(|(w, b)| w * b).sum::<Vec3>() * 0.5;
        assert!((h - Vec3::new(0.15, 0.35, 0.0)).norm() < 1e-15);
        let inc = weight_increment(0.01, 2.0, &Vec3::new(0.0, -3.0, 0.0), 0.5, &[1.0]);
        assert!((inc[0] - Vec3::new(0.0, -0.03, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_residual_or_rate_leaves_weights() {
        let p12 = Vec3::new(0.0, -3.0, 0.0);
        let mut net = FwnnState::new(FwnnConfig::reference());
        // residual is delta_psi - p12 . 0 = delta_psi; pick delta_psi = 0
        let r = net.update_weights(&p12, 0.0, 0).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(net.weights, vec![Vec3::zeros()]);

        let mut frozen = FwnnState::new(FwnnConfig {
            learning_rate: 0.0,
            ..FwnnConfig::reference()
        });
        frozen.update_weights(&p12, 500.0, 0).unwrap();
        assert_eq!(frozen.weights, vec![Vec3::zeros()]);
    }

    #[test]
    fn non_finite_residual_is_adaptation_divergence() {
        let mut net = FwnnState::new(FwnnConfig::reference());
        net.weights[0] = Vec3::new(f64::MAX, 0.0, 0.0);
        let err = net
            .update_weights(&Vec3::new(f64::MAX, 0.0, 0.0), 1001.0, 42)
            .unwrap_err();
        assert!(matches!(err, SimError::AdaptationDiverged { k: 42, .. }));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn gradient_matches_central_differences() {
        let cfg = FwnnConfig {
            rules: 2,
            rule_centers: vec![-20.0, 40.0],
            ..FwnnConfig::reference()
        };
        let mut net = FwnnState::new(cfg);
        net.weights = vec![Vec3::new(0.3, -0.2, 0.1), Vec3::new(-0.5, 0.4, 0.2)];
        let p12 = Vec3::new(1.2, -2.0, 0.7);
        let dp = 10.0;

        // analytic gradient: -increment / alpha
        let (h, eta, basis) = net.evaluate(dp).unwrap();
        let residual = dp - p12.dot(&h);
        let grad: Vec<Vec3> = weight_increment(1.0, residual, &p12, eta, &basis)
            .into_iter()
            .map(|g| -g)
            .collect();

        for rule in 0..2 {
            for c in 0..3 {
                let step = 1e-4;
                let mut plus = net.clone();
                plus.weights[rule][c] += step;
                let mut minus = net.clone();
                minus.weights[rule][c] -= step;
                let fd =
                    (plus.cost(&p12, dp).unwrap() - minus.cost(&p12, dp).unwrap()) / (2.0 * step);
                let rel = (fd - grad[rule][c]).abs() / grad[rule][c].abs().max(1e-12);
                assert!(
                    rel < 1e-6,
                    "rule {rule} comp {c}: fd {fd} vs {}",
                    grad[rule][c]
                );
            }
        }

        let before = net.cost(&p12, dp).unwrap();
        let mut stepped = net.clone();
        stepped.config.learning_rate = 1e-3;
        stepped.update_weights(&p12, dp, 0).unwrap();
        assert!(stepped.cost(&p12, dp).unwrap() < before);
    }

    proptest! {
        #[test]
        fn basis_sums_to_one(
            dp in -1e6f64..1e6,
            rules in 1usize..6,
            centers in proptest::collection::vec(-500f64..500.0, 6),
            spread in 1f64..300.0,
        ) {
            let cfg = FwnnConfig {
                rules,
                spread,
                rule_centers: centers[..rules].to_vec(),
                ..FwnnConfig::reference()
            };
            let b = fuzzy_basis(&input_variables(dp, &cfg), &cfg).unwrap();
            prop_assert_eq!(b.len(), rules);
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(b.iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn residual_contracts_under_constant_input(
            hx in -50f64..50.0, hy in -50f64..50.0, hz in -50f64..50.0,
            px in -1.4f64..1.4, py in -1.4f64..1.4, pz in -1.4f64..1.4,
            alpha in 0.001f64..0.99,
        ) {
            // ||p12||^2 <= 5.88, so alpha * factor stays well inside (0, 2)
            let p12 = Vec3::new(px, py, pz);
            let h = Vec3::new(hx, hy, hz) * 40.0;
            let dp = p12.dot(&h);
            let mut net = FwnnState::new(FwnnConfig { learning_rate: alpha, ..FwnnConfig::reference() });
            let factor = net.excitation_factor(&p12, dp).unwrap();
            let gate = alpha * (2.0 * factor - alpha * factor * factor);
            prop_assume!(gate > 0.0 && gate < 1.0);
            let mut prev = f64::INFINITY;
            for k in 0..50 {
                let r = net.update_weights(&p12, dp, k).unwrap().abs();
                prop_assert!(r <= prev + 1e-9);
                prev = r;
            }
        }
    }
}
