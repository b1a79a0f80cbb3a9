//! Covariance storage for the forgetting-factor recursion.
//!
//! With a forgetting factor below one, any direction that `p12` never excites
//! has its covariance multiplied by `1 / forgetting` every step. A planar
//! encirclement never excites the vertical axis, so after a few hundred steps
//! the plain f64 matrix overflows. The covariance is therefore kept as
//! `D * scaled * D` with `D = diag(2^e)`: `scaled` stays O(1) on its diagonal
//! and the exponents absorb the growth exactly, since scaling by powers of two
//! never rounds.

use nalgebra::SymmetricEigen;

use crate::error::{Result, SimError};
use crate::{Mat3, Vec3};

/// Smallest covariance eigenvalue accepted before the recursion is declared
/// degenerate.
pub const MIN_EIGENVALUE: f64 = 1e-12;

const LOG10_2: f64 = std::f64::consts::LOG10_2;

/// `x * 2^e` without overflowing the intermediate power.
pub(crate) fn ldexp(mut x: f64, mut e: i32) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if !x.is_finite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e)
}

fn binary_exponent(x: f64) -> i32 {
    x.abs().log2().floor() as i32
}

#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    scaled: Mat3,
    exponents: [i32; 3],
}

impl Covariance {
    pub fn from_matrix(m: &Mat3) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(SimError::Config("covariance must be finite".into()));
        }
        if (m - m.transpose()).amax() > 1e-10 * m.amax().max(1.0) {
            return Err(SimError::Config("covariance must be symmetric".into()));
        }
        if m.cholesky().is_none() {
            return Err(SimError::Config(
                "covariance must be positive definite".into(),
            ));
        }
        let mut cov = Self {
            scaled: (m + m.transpose()) * 0.5,
            exponents: [0; 3],
        };
        cov.rebalance();
        Ok(cov)
    }

    pub fn exponents(&self) -> [i32; 3] {
        self.exponents
    }

    /// Plain matrix form. Entries beyond the f64 range come out infinite.
    pub fn to_matrix(&self) -> Mat3 {
        Mat3::from_fn(|i, j| ldexp(self.scaled[(i, j)], self.exponents[i] + self.exponents[j]))
    }

    fn rebalance(&mut self) {
        for i in 0..3 {
            let d = self.scaled[(i, i)];
            if !(d > 0.0 && d.is_finite()) {
                continue;
            }
            let shift = (d.log2() / 2.0).round() as i32;
            if shift == 0 {
                continue;
            }
            let f = ldexp(1.0, -shift);
            for j in 0..3 {
                self.scaled[(i, j)] *= f;
                self.scaled[(j, i)] *= f;
            }
            self.exponents[i] += shift;
        }
    }

    /// One step of the recursion
    /// `xi(k)^-1 = forgetting * xi(k-1)^-1 + p12 p12^T / utilization`,
    /// evaluated through the rank-one inversion identity. Returns the new
    /// covariance and the gain `xi(k-1) p12 / (forgetting * utilization +
    /// p12^T xi(k-1) p12)`.
    pub fn update(&self, p12: &Vec3, forgetting: f64, utilization: f64) -> Result<(Self, Vec3)> {
        let top = (0..3)
            .filter(|&i| p12[i] != 0.0)
            .map(|i| binary_exponent(p12[i]) + self.exponents[i])
            .max();
        let Some(top) = top else {
            let next = Self {
                scaled: self.scaled / forgetting,
                exponents: self.exponents,
            };
            next.check_definite()?;
            return Ok((next, Vec3::zeros()));
        };
        // q = D p12 / 2^top has entries of order one
        let q = Vec3::from_fn(|i, _| ldexp(p12[i], self.exponents[i] - top));
        let v = self.scaled * q;
        let denom = ldexp(forgetting * utilization, -2 * top) + q.dot(&v);
        let mut scaled = (self.scaled - v * v.transpose() / denom) / forgetting;
        scaled = (scaled + scaled.transpose()) * 0.5;
        let gain = Vec3::from_fn(|i, _| ldexp(v[i] / denom, self.exponents[i] - top));

        let mut next = Self {
            scaled,
            exponents: self.exponents,
        };
        next.rebalance();
        next.check_definite()?;
        Ok((next, gain))
    }

    fn check_definite(&self) -> Result<()> {
        if self.scaled.cholesky().is_none() {
            return Err(SimError::CovarianceDegenerate {
                min_eigenvalue: self.scaled.symmetric_eigenvalues().min(),
            });
        }
        let min = self.min_eigenvalue();
        if min.is_nan() || min <= MIN_EIGENVALUE {
            return Err(SimError::CovarianceDegenerate {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }

    fn scaled_inverse(&self) -> Mat3 {
        self.scaled
            .cholesky()
            .map(|c| c.inverse())
            .unwrap_or_else(|| Mat3::from_element(f64::NAN))
    }

    /// Base-10 logarithms of the eigenvalues, ascending. Finite even when the
    /// eigenvalues themselves are not representable.
    pub fn log10_eigenvalues(&self) -> [f64; 3] {
        let e = self.exponents;
        let hi = *e.iter().max().unwrap();
        let lo = *e.iter().min().unwrap();

        let down = Vec3::from_fn(|i, _| ldexp(1.0, e[i] - hi));
        let fwd = Mat3::from_diagonal(&down) * self.scaled * Mat3::from_diagonal(&down);
        let log_max = 2.0 * hi as f64 * LOG10_2 + largest_eigenvalue(&fwd).log10();

        let up = Vec3::from_fn(|i, _| ldexp(1.0, lo - e[i]));
        let inv = Mat3::from_diagonal(&up) * self.scaled_inverse() * Mat3::from_diagonal(&up);
        let log_min = 2.0 * lo as f64 * LOG10_2 - largest_eigenvalue(&inv).log10();

        let log_det = 2.0 * e.iter().map(|&x| x as f64).sum::<f64>() * LOG10_2
            + self.scaled.determinant().log10();
        [log_min, log_det - log_min - log_max, log_max]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        10f64.powf(self.log10_eigenvalues()[0])
    }

    /// `|| (I - gain p12^T) - forgetting * xi(k) xi(k-1)^-1 ||_inf` for a
    /// transition `prev -> self`. The right-hand side is formed from the two
    /// covariances directly, so this checks the gain against the covariance
    /// recursion.
    pub fn identity_residual(
        &self,
        prev: &Covariance,
        gain: &Vec3,
        p12: &Vec3,
        forgetting: f64,
    ) -> f64 {
        let lhs = Mat3::identity() - gain * p12.transpose();
        let prev_inv = prev.scaled_inverse();
        let (en, ep) = (self.exponents, prev.exponents);
        let rhs = Mat3::from_fn(|i, j| {
            forgetting
                * (0..3)
                    .map(|m| {
                        ldexp(
                            self.scaled[(i, m)] * prev_inv[(m, j)],
                            en[i] + en[m] - ep[m] - ep[j],
                        )
                    })
                    .sum::<f64>()
        });
        let diff = lhs - rhs;
        (0..3)
            .map(|i| diff.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn largest_eigenvalue(m: &Mat3) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.max()
}
