use crate::error::{Error, Result};
use crate::math::effect::{EffectDefinition, EffectEval};
use serde::{Deserialize, Serialize};

/// Population-level quantities the efficiency bound depends on.
///
/// `sigma_w` is the marginal standard deviation of the potential outcome in
/// arm `w` and `kappa_w` the root of its average conditional variance
/// `E[Var(Y_w | X)]`. `gamma` is the correlation between the two conditional
/// mean functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    pub sigma0: f64,
    pub sigma1: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub gamma: f64,
    pub pi0: f64,
    pub pi1: f64,
    pub mu0: f64,
    pub mu1: f64,
}

const PI_TOL: f64 = 1e-9;

impl PopulationParams {
    /// Checks every invariant: `0 ≤ κ_w ≤ σ_w`, `γ ∈ [−1, 1]`,
    /// `π0 + π1 = 1` with both in (0, 1), finite means.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.sigma0, self.sigma1, self.kappa0, self.kappa1, self.gamma, self.pi0, self.pi1, self.mu0, self.mu1,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("population parameters must be finite"));
        }
        for (arm, sigma, kappa) in [(0, self.sigma0, self.kappa0), (1, self.sigma1, self.kappa1)] {
            if sigma < 0.0 || kappa < 0.0 {
                return Err(Error::invalid(format!("arm {arm}: sigma and kappa must be nonnegative")));
            }
            if kappa > sigma * (1.0 + 1e-12) {
                return Err(Error::invalid(format!(
                    "arm {arm}: kappa ({kappa}) exceeds sigma ({sigma}); average conditional variance cannot exceed marginal variance"
                )));
            }
        }
        if !(-1.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("gamma must lie in [-1, 1], got {}", self.gamma)));
        }
        if !(self.pi0 > 0.0 && self.pi0 < 1.0 && self.pi1 > 0.0 && self.pi1 < 1.0) {
            return Err(Error::invalid("treatment fractions must lie in (0, 1)"));
        }
        if (self.pi0 + self.pi1 - 1.0).abs() > PI_TOL {
            return Err(Error::invalid(format!(
                "treatment fractions must sum to 1, got {} + {}",
                self.pi0, self.pi1
            )));
        }
        Ok(())
    }

    /// The effect implied by the marginal means and its partials there.
    pub fn effect_at_means(&self, effect: EffectDefinition) -> Result<EffectEval> {
        effect.evaluate(self.mu0, self.mu1)
    }

    /// Target effect minus its null value, `r(μ0, μ1) − r(μ0, μ0)`.
    pub fn effect_shift(&self, effect: EffectDefinition) -> Result<f64> {
        Ok(self.effect_at_means(effect)?.tau - effect.null_value())
    }
}

/// Everything needed to size a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignInputs {
    /// Two-sided significance level.
    pub alpha: f64,
    pub target_power: f64,
    pub effect: EffectDefinition,
    pub params: PopulationParams,
}

impl DesignInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.target_power > 0.0 && self.target_power < 1.0) {
            return Err(Error::invalid(format!("target power must lie in (0,1), got {}", self.target_power)));
        }
        if self.target_power <= self.alpha {
            return Err(Error::invalid(format!(
                "target power ({}) must exceed alpha ({})",
                self.target_power, self.alpha
            )));
        }
        self.params.validate()?;
        self.params.effect_at_means(self.effect)?;
        Ok(())
    }
}
