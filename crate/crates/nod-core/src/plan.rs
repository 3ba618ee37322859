//! Step-size and momentum schedule.
//!
//! Given a step `eta` and strong-monotonicity modulus `mu`, the scheme runs
//! with momentum `tau = (1 - s)/(1 + s)` and lookahead `theta = 1/s - 1`
//! where `s = sqrt(eta * mu)`. The default step is `C * min(1/L_phi,
//! mu/L_S^2)` with `C` from [`crate::constants`].

use crate::constants::solve_c;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("eta*mu must lie in (0, 1], got {0}")]
    EtaMuOutOfRange(f64),
    #[error("mu must be positive and finite, got {0}")]
    NonPositiveMu(f64),
    #[error("L_phi must be finite and at least mu = {mu}, got {l_phi}")]
    SmoothnessBelowMu { l_phi: f64, mu: f64 },
    #[error("Lipschitz constant must be nonnegative and finite, got {0}")]
    BadLipschitz(f64),
}

/// Step size plus the momentum coefficients it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan {
    pub eta: f64,
    pub mu: f64,
    pub tau: f64,
    pub theta: f64,
}

impl StepPlan {
    pub fn new(eta: f64, mu: f64) -> Result<StepPlan, PlanError> {
        let product = eta * mu;
        if !(product > 0.0 && product <= 1.0) || !eta.is_finite() || !mu.is_finite() {
            return Err(PlanError::EtaMuOutOfRange(product));
        }
        let s = product.sqrt();
        Ok(StepPlan {
            eta,
            mu,
            tau: (1.0 - s) / (1.0 + s),
            theta: 1.0 / s - 1.0,
        })
    }

    /// `sqrt(eta * mu)`, the per-iteration contraction increment.
    pub fn s(&self) -> f64 {
        (self.eta * self.mu).sqrt()
    }

    /// One-step contraction factor `1 - sqrt(eta * mu)`.
    pub fn rate(&self) -> f64 {
        1.0 - self.s()
    }
}

/// Largest certified step: `C * min(1/L_phi, mu/L_S^2)`, reducing to
/// `C / L_phi` when the splitting term vanishes.
pub fn default_eta(mu: f64, l_phi: f64, l_s: f64) -> Result<f64, PlanError> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(PlanError::NonPositiveMu(mu));
    }
    if !(l_phi >= mu) || !l_phi.is_finite() {
        return Err(PlanError::SmoothnessBelowMu { l_phi, mu });
    }
    if !(l_s >= 0.0) || !l_s.is_finite() {
        return Err(PlanError::BadLipschitz(l_s));
    }
    let c = solve_c();
    if l_s == 0.0 {
        return Ok(c / l_phi);
    }
    Ok(c * (1.0 / l_phi).min(mu / (l_s * l_s)))
}

/// Block constants of a saddle objective with bilinear coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessProfile {
    pub mu_x: f64,
    pub mu_y: f64,
    pub l_x: f64,
    pub l_y: f64,
    pub l_xy: f64,
}

impl SmoothnessProfile {
    pub fn new(
        mu_x: f64,
        mu_y: f64,
        l_x: f64,
        l_y: f64,
        l_xy: f64,
    ) -> Result<SmoothnessProfile, PlanError> {
        if !(mu_x > 0.0) || !mu_x.is_finite() {
            return Err(PlanError::NonPositiveMu(mu_x));
        }
        if !(mu_y > 0.0) || !mu_y.is_finite() {
            return Err(PlanError::NonPositiveMu(mu_y));
        }
        if !(l_x >= mu_x) || !l_x.is_finite() {
            return Err(PlanError::SmoothnessBelowMu { l_phi: l_x, mu: mu_x });
        }
        if !(l_y >= mu_y) || !l_y.is_finite() {
            return Err(PlanError::SmoothnessBelowMu { l_phi: l_y, mu: mu_y });
        }
        if !(l_xy >= 0.0) || !l_xy.is_finite() {
            return Err(PlanError::BadLipschitz(l_xy));
        }
        Ok(SmoothnessProfile { mu_x, mu_y, l_x, l_y, l_xy })
    }

    /// Smoothness of the block-rescaled potential, `max(L_x/mu_x, L_y/mu_y)`.
    pub fn scaled_l_phi(&self) -> f64 {
        (self.l_x / self.mu_x).max(self.l_y / self.mu_y)
    }

    /// Lipschitz constant of the block-rescaled coupling,
    /// `L_xy / sqrt(mu_x * mu_y)`.
    pub fn scaled_l_s(&self) -> f64 {
        self.l_xy / (self.mu_x * self.mu_y).sqrt()
    }
}

/// Spectral norm of `[[l_x, l_xy], [l_xy, l_y]]`, the smoothness constant of
/// the joint objective seen as one function of `(x, y)`.
pub fn joint_smoothness(l_x: f64, l_y: f64, l_xy: f64) -> Result<f64, PlanError> {
    for &v in &[l_x, l_y, l_xy] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(PlanError::BadLipschitz(v));
        }
    }
    let mean = 0.5 * (l_x + l_y);
    let half_gap = 0.5 * (l_x - l_y);
    Ok(mean + (half_gap * half_gap + l_xy * l_xy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::solve_c;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn momentum_coefficients_at_reference_products() {
        let p = StepPlan::new(0.01, 1.0).unwrap();
        assert_abs_diff_eq!(p.tau, 0.9 / 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p.theta, 9.0, epsilon = 1e-12);
        let p = StepPlan::new(0.25, 1.0).unwrap();
        assert_abs_diff_eq!(p.tau, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.theta, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn plan_rejects_bad_products() {
        assert!(StepPlan::new(0.0, 1.0).is_err());
        assert!(StepPlan::new(-0.1, 1.0).is_err());
        assert!(StepPlan::new(2.0, 1.0).is_err());
        assert!(StepPlan::new(f64::NAN, 1.0).is_err());
        assert!(StepPlan::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn default_eta_reference_values() {
        let c = solve_c();
        assert_abs_diff_eq!(default_eta(1.0, 2.0, 2.0).unwrap(), c / 4.0, epsilon = 1e-18);
        assert_abs_diff_eq!(default_eta(1.0, 10.0, 0.0).unwrap(), c / 10.0, epsilon = 1e-18);
        assert_abs_diff_eq!(default_eta(1.0, 1.0, 4.0).unwrap(), c / 16.0, epsilon = 1e-18);
        assert!(default_eta(0.0, 1.0, 0.0).is_err());
        assert!(default_eta(-1.0, 1.0, 0.0).is_err());
        assert!(default_eta(2.0, 1.0, 0.0).is_err());
        assert!(default_eta(1.0, 1.0, -3.0).is_err());
    }

    #[test]
    fn joint_smoothness_reference_value() {
        assert_abs_diff_eq!(joint_smoothness(3.0, 3.0, 1.0).unwrap(), 4.0, epsilon = 1e-15);
        assert!(joint_smoothness(-1.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn scaled_profile_constants() {
        let p = SmoothnessProfile::new(1.0, 4.0, 2.0, 8.0, 3.0).unwrap();
        assert_abs_diff_eq!(p.scaled_l_phi(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.scaled_l_s(), 1.5, epsilon = 1e-15);
    }

    proptest! {
        // The telescoping identity behind the momentum schedule:
        // tau + 1 + tau/s = 1/s for s = sqrt(eta*mu).
        #[test]
        fn momentum_telescoping_identity(p in 1e-8f64..=1.0) {
            let plan = StepPlan::new(p, 1.0).unwrap();
            let s = plan.s();
            let lhs = plan.tau + 1.0 + plan.tau / s;
            let rhs = 1.0 / s;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }

        #[test]
        fn default_eta_never_exceeds_inverse_smoothness(
            mu in 1e-6f64..10.0,
            excess in 0.0f64..100.0,
            l_s in 0.0f64..50.0,
        ) {
            let l_phi = mu + excess;
            let eta = default_eta(mu, l_phi, l_s).unwrap();
            prop_assert!(eta > 0.0);
            prop_assert!(eta <= solve_c() / l_phi * (1.0 + 1e-15));
            let plan = StepPlan::new(eta, mu).unwrap();
            prop_assert!(plan.tau > 0.0 && plan.tau < 1.0);
            prop_assert!(plan.theta > 0.0);
        }
    }
}
