//! The non-cutoff collision kernel family `sigma(g, theta) = Phi(g) sigma0(theta)`,
//! its hard/soft parameter ranges, angular-cutoff regularization and the
//! dyadic partition around the pre-post relative momentum.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("gamma = {0} outside (0, 1)")]
    GammaOutOfRange(f64),
    #[error("hard family requires -gamma <= rho < 2, got rho = {rho}, gamma = {gamma}")]
    HardExponent { rho: f64, gamma: f64 },
    #[error("soft family requires -3/2 - gamma < rho < -gamma, got rho = {rho}, gamma = {gamma}")]
    SoftExponent { rho: f64, gamma: f64 },
    #[error("c_phi must be positive, got {0}")]
    NonPositiveCoefficient(f64),
    #[error("epsilon must be nonnegative, got {0}")]
    NegativeCutoff(f64),
    #[error("soft kernel is singular at g = 0")]
    SingularAtZero,
    #[error("theta = {0} outside (0, pi/2]")]
    ThetaOutOfDomain(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hard,
    Soft,
}

/// Angular model for `sigma0`. `Canonical` is pinned so that
/// `sin(theta) * sigma0(theta) = theta^(-1-gamma)` exactly; `Constant` covers
/// the pointwise-bounded kernels used by the cancellation counterexample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngularModel {
    Canonical,
    Constant(f64),
}

/// Parameters of one collision kernel.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: Family,
    /// Momentum exponent: `a` for hard interactions, `-b` for soft ones.
    pub rho: f64,
    pub gamma: f64,
    pub c_phi: f64,
    /// Angular cutoff: `sigma0` is zeroed for `theta < epsilon`.
    pub epsilon: f64,
    pub angular: AngularModel,
}

impl KernelSpec {
    pub fn new(
        family: Family,
        rho: f64,
        gamma: f64,
        c_phi: f64,
        epsilon: f64,
    ) -> Result<Self, KernelError> {
        let spec = KernelSpec {
            family,
            rho,
            gamma,
            c_phi,
            epsilon,
            angular: AngularModel::Canonical,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn hard(a: f64, gamma: f64, c_phi: f64, epsilon: f64) -> Result<Self, KernelError> {
        Self::new(Family::Hard, a, gamma, c_phi, epsilon)
    }

    pub fn soft(b: f64, gamma: f64, c_phi: f64, epsilon: f64) -> Result<Self, KernelError> {
        Self::new(Family::Soft, -b, gamma, c_phi, epsilon)
    }

    pub fn with_angular(mut self, angular: AngularModel) -> Self {
        self.angular = angular;
        self
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(KernelError::GammaOutOfRange(self.gamma));
        }
        match self.family {
            Family::Hard => {
                if !(-self.gamma <= self.rho && self.rho < 2.0) {
                    return Err(KernelError::HardExponent {
                        rho: self.rho,
                        gamma: self.gamma,
                    });
                }
            }
            Family::Soft => {
                if !(-1.5 - self.gamma < self.rho && self.rho < -self.gamma) {
                    return Err(KernelError::SoftExponent {
                        rho: self.rho,
                        gamma: self.gamma,
                    });
                }
            }
        }
        if self.c_phi <= 0.0 {
            return Err(KernelError::NonPositiveCoefficient(self.c_phi));
        }
        if self.epsilon < 0.0 {
            return Err(KernelError::NegativeCutoff(self.epsilon));
        }
        Ok(())
    }

    /// Momentum part `Phi(g) = C_phi g^rho`.
    pub fn phi(&self, g: f64) -> Result<f64, KernelError> {
        if g <= 0.0 && self.rho < 0.0 {
            return Err(KernelError::SingularAtZero);
        }
        Ok(self.c_phi * g.powf(self.rho))
    }

    /// Angular part on `(0, pi/2]`, zeroed below the cutoff.
    pub fn sigma0(&self, theta: f64) -> Result<f64, KernelError> {
        if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
            return Err(KernelError::ThetaOutOfDomain(theta));
        }
        if theta < self.epsilon {
            return Ok(0.0);
        }
        Ok(match self.angular {
            // theta^(-2-gamma) * (theta / sin(theta)), so sin(theta) sigma0 = theta^(-1-gamma)
            AngularModel::Canonical => theta.powf(-2.0 - self.gamma) * theta / theta.sin(),
            AngularModel::Constant(c) => c,
        })
    }

    /// Full kernel `Phi(g) sigma0(theta)`; support restricted to `cos(theta) >= 0`.
    pub fn sigma(&self, g: f64, theta: f64) -> Result<f64, KernelError> {
        Ok(self.phi(g)? * self.sigma0(theta)?)
    }

    /// Kernel with the angle given through its cosine, returning zero outside
    /// the supported range instead of erroring (quadrature-facing form).
    pub fn sigma_from_cos(&self, g: f64, cos_theta: f64) -> f64 {
        if cos_theta < 0.0 {
            return 0.0;
        }
        let theta = cos_theta.clamp(-1.0, 1.0).acos();
        if theta <= 0.0 || theta < self.epsilon {
            return 0.0;
        }
        let phi = match self.phi(g) {
            Ok(v) => v,
            Err(_) => return 0.0,
        };
        let s0 = match self.angular {
            AngularModel::Canonical => theta.powf(-2.0 - self.gamma) * theta / theta.sin(),
            AngularModel::Constant(c) => c,
        };
        phi * s0
    }
}

/// C-infinity transition: 0 for t <= 0, 1 for t >= 1.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

// Low-pass profile at scale k: 1 for x <= 2^{-k-1}, 0 for x >= 2^{-k}.
fn lowpass(k: i32, x: f64) -> f64 {
    let y = x * 2.0_f64.powi(k);
    smoothstep(2.0 - 2.0 * y)
}

/// Dyadic partition member `chi_k`, peaked at `2^-k`.
///
/// Built by telescoping one smoothstep profile, so that the family is an
/// exact partition of unity on any covered window: `sum_{k=k0}^{k1} chi_k`
/// equals 1 on `[2^-k1, 2^-k0-...]` and `0 <= chi_k <= 1`. The support is
/// `[2^{-k-1}, 2^{-k+1}]`: a smooth partition cannot live on the single cell
/// `[2^{-k-1}, 2^{-k}]`, the sharp indicator is the only one that does.
pub fn dyadic_chi(k: i32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    lowpass(k - 1, x) - lowpass(k, x)
}

/// Support bounds of `chi_k`.
pub fn dyadic_chi_support(k: i32) -> (f64, f64) {
    (2.0_f64.powi(-k - 1), 2.0_f64.powi(-k + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn family_parameter_validation() {
        assert!(KernelSpec::hard(0.0, 0.5, 1.0, 0.0).is_ok());
        assert!(KernelSpec::hard(1.99, 0.9, 1.0, 0.0).is_ok());
        assert!(KernelSpec::hard(2.0, 0.5, 1.0, 0.0).is_err());
        assert!(KernelSpec::hard(-0.6, 0.5, 1.0, 0.0).is_err());
        assert!(KernelSpec::soft(1.0, 0.5, 1.0, 0.0).is_ok());
        assert!(KernelSpec::soft(0.4, 0.5, 1.0, 0.0).is_err());
        assert!(KernelSpec::soft(2.1, 0.5, 1.0, 0.0).is_err());
        assert!(KernelSpec::hard(0.0, 1.5, 1.0, 0.0).is_err());
        assert!(KernelSpec::hard(0.0, 0.5, -1.0, 0.0).is_err());
        // the unified exponent range -3/2 < rho + gamma < 2 + gamma follows
        let k = KernelSpec::soft(1.9, 0.45, 1.0, 0.0).unwrap();
        assert!(k.rho + k.gamma > -1.5);
    }

    #[test]
    fn phi_examples() {
        let hard = KernelSpec::hard(1.0, 0.5, 1.0, 0.0).unwrap();
        assert_eq!(hard.phi(1.0).unwrap(), 1.0);
        assert_eq!(hard.phi(2.0).unwrap(), 2.0);
        let soft = KernelSpec::soft(1.0, 0.5, 2.5, 0.0).unwrap();
        assert!((soft.phi(0.5).unwrap() - 5.0).abs() < 1e-14);
        assert_eq!(soft.phi(0.0), Err(KernelError::SingularAtZero));
    }

    #[test]
    fn sigma0_examples() {
        let k = KernelSpec::hard(0.0, 0.5, 1.0, 0.0).unwrap();
        // theta = pi/2: (pi/2)^(-5/2) * (pi/2) / sin(pi/2)
        let expect = FRAC_PI_2.powf(-2.5) * FRAC_PI_2;
        assert!((k.sigma0(FRAC_PI_2).unwrap() - expect).abs() < 1e-14);
        // divergence like theta^(-2-gamma)
        let r = k.sigma0(1e-6).unwrap() / 1e-6_f64.powf(-2.5);
        assert!((r - 1.0).abs() < 1e-9);
        assert!(k.sigma0(0.0).is_err());
        assert!(k.sigma0(2.0).is_err());
        let cut = KernelSpec::hard(0.0, 0.5, 1.0, 0.1).unwrap();
        assert_eq!(cut.sigma0(0.05).unwrap(), 0.0);
        assert!(cut.sigma0(0.15).unwrap() > 0.0);
    }

    #[test]
    fn sin_sigma0_is_exact_power_law() {
        let k = KernelSpec::hard(0.0, 0.7, 1.0, 0.0).unwrap();
        for &theta in &[1e-4, 1e-2, 0.3, 1.0, FRAC_PI_2] {
            let lhs = theta.sin() * k.sigma0(theta).unwrap();
            let rhs = theta.powf(-1.7);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn truncated_angular_mass_doubles_under_cutoff_halving() {
        // int_eps^{pi/2} sigma0 sin dtheta ~ eps^-gamma / gamma as eps -> 0,
        // so halving eps multiplies the mass by at least 2^gamma (1 - delta).
        let k = KernelSpec::hard(0.0, 0.5, 1.0, 0.0).unwrap();
        let mass = |eps: f64| {
            let n = 20_000;
            let mut acc = 0.0;
            for i in 0..n {
                let t = eps + (FRAC_PI_2 - eps) * (i as f64 + 0.5) / n as f64;
                acc += t.sin() * k.sigma0(t).unwrap() * (FRAC_PI_2 - eps) / n as f64;
            }
            acc
        };
        let mut eps = 0.2;
        let mut prev = mass(eps);
        for _ in 0..4 {
            eps /= 2.0;
            let next = mass(eps);
            assert!(next >= prev * 2.0_f64.powf(0.5) * 0.9);
            prev = next;
        }
    }

    #[test]
    fn dyadic_partition() {
        // midpoint of cell k: chi_k + chi_{k+1} = 1
        for k in [-6, -1, 0, 1, 5] {
            let x = 3.0 * 2.0_f64.powi(-k - 2);
            let sum = dyadic_chi(k, x) + dyadic_chi(k + 1, x);
            assert!((sum - 1.0).abs() < 1e-14, "k = {k}");
            let (lo, hi) = dyadic_chi_support(k);
            assert_eq!(dyadic_chi(k, lo * 0.99), 0.0);
            assert_eq!(dyadic_chi(k, hi * 1.01), 0.0);
        }
        // partition over a covering window
        for &x in &[0.3, 0.011, 0.9, 2.7, 0.0625] {
            let total: f64 = (-10..=10).map(|k| dyadic_chi(k, x)).sum();
            assert!((total - 1.0).abs() < 1e-10, "x = {x}, total = {total}");
        }
        // range and smoothness spot checks
        let mut prev = dyadic_chi(2, 0.12);
        for i in 1..200 {
            let x = 0.12 + i as f64 * 0.001;
            let v = dyadic_chi(2, x);
            assert!((0.0..=1.0).contains(&v));
            assert!((v - prev).abs() < 0.05, "jump at {x}");
            prev = v;
        }
    }
}
