//! Treatment-effect functions `τ = r(μ0, μ1)` of the two arm means.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Marginal effect definition. Every variant is nonincreasing in the control
/// mean and nondecreasing in the treated mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EffectDefinition {
    /// `μ1 − μ0`.
    #[default]
    #[serde(alias = "diff")]
    DifferenceInMeans,
    /// `(μ1/(1−μ1)) / (μ0/(1−μ0))`; both means must lie in (0, 1).
    #[serde(alias = "or")]
    OddsRatio,
}

/// `r(μ0, μ1)` together with its partial derivatives at that point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectEval {
    pub tau: f64,
    /// ∂r/∂μ0 (≤ 0).
    pub d_mu0: f64,
    /// ∂r/∂μ1 (≥ 0).
    pub d_mu1: f64,
}

impl EffectDefinition {
    /// Value of `r` when both arm means coincide.
    pub fn null_value(self) -> f64 {
        match self {
            EffectDefinition::DifferenceInMeans => 0.0,
            EffectDefinition::OddsRatio => 1.0,
        }
    }

    pub fn check_means(self, mu0: f64, mu1: f64) -> Result<()> {
        if !mu0.is_finite() || !mu1.is_finite() {
            return Err(Error::domain("arm means must be finite"));
        }
        if self == EffectDefinition::OddsRatio {
            for (name, mu) in [("mu0", mu0), ("mu1", mu1)] {
                if !(mu > 0.0 && mu < 1.0) {
                    return Err(Error::domain(format!(
                        "odds ratio requires {name} strictly inside (0,1), got {mu}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluates `r` and both partials at `(mu0, mu1)`.
    pub fn evaluate(self, mu0: f64, mu1: f64) -> Result<EffectEval> {
        self.check_means(mu0, mu1)?;
        Ok(match self {
            EffectDefinition::DifferenceInMeans => EffectEval { tau: mu1 - mu0, d_mu0: -1.0, d_mu1: 1.0 },
            EffectDefinition::OddsRatio => {
                let odds1 = mu1 / (1.0 - mu1);
                let inv_odds0 = (1.0 - mu0) / mu0;
                EffectEval {
                    tau: odds1 * inv_odds0,
                    d_mu0: -odds1 / (mu0 * mu0),
                    d_mu1: inv_odds0 / ((1.0 - mu1) * (1.0 - mu1)),
                }
            }
        })
    }

    /// Solves `r(mu0, mu1) = tau` for `mu1`.
    pub fn treated_mean_for(self, mu0: f64, tau: f64) -> Result<f64> {
        if !tau.is_finite() {
            return Err(Error::domain("target effect must be finite"));
        }
        match self {
            EffectDefinition::DifferenceInMeans => {
                if !mu0.is_finite() {
                    return Err(Error::domain("control mean must be finite"));
                }
                Ok(mu0 + tau)
            }
            EffectDefinition::OddsRatio => {
                if !(mu0 > 0.0 && mu0 < 1.0) {
                    return Err(Error::domain(format!(
                        "odds-ratio target needs a control mean inside (0,1), got {mu0}"
                    )));
                }
                if tau <= 0.0 {
                    return Err(Error::domain(format!("odds-ratio target must be positive, got {tau}")));
                }
                let odds1 = tau * mu0 / (1.0 - mu0);
                Ok(odds1 / (1.0 + odds1))
            }
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            EffectDefinition::DifferenceInMeans => "diff",
            EffectDefinition::OddsRatio => "or",
        }
    }
}

/// Free-function form of [`EffectDefinition::evaluate`].
pub fn effect_and_derivatives(effect: EffectDefinition, mu0: f64, mu1: f64) -> Result<(f64, f64, f64)> {
    let e = effect.evaluate(mu0, mu1)?;
    Ok((e.tau, e.d_mu0, e.d_mu1))
}

impl fmt::Display for EffectDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for EffectDefinition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diff" | "difference" | "difference_in_means" => Ok(EffectDefinition::DifferenceInMeans),
            "or" | "odds_ratio" | "odds-ratio" => Ok(EffectDefinition::OddsRatio),
            other => Err(Error::invalid(format!("unknown effect '{other}' (expected diff or or)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn central_diff(effect: EffectDefinition, mu0: f64, mu1: f64, h: f64) -> (f64, f64) {
        let r = |a: f64, b: f64| effect.evaluate(a, b).unwrap().tau;
        ((r(mu0 + h, mu1) - r(mu0 - h, mu1)) / (2.0 * h), (r(mu0, mu1 + h) - r(mu0, mu1 - h)) / (2.0 * h))
    }

    #[test]
    fn difference_in_means() {
        assert_eq!(effect_and_derivatives(EffectDefinition::DifferenceInMeans, 3.0, 5.0).unwrap(), (2.0, -1.0, 1.0));
        assert_eq!(effect_and_derivatives(EffectDefinition::DifferenceInMeans, 1.25, 1.25).unwrap(), (0.0, -1.0, 1.0));
    }

    #[test]
    fn odds_ratio_at_half() {
        let (tau, d0, d1) = effect_and_derivatives(EffectDefinition::OddsRatio, 0.5, 0.5).unwrap();
        let (fd0, fd1) = central_diff(EffectDefinition::OddsRatio, 0.5, 0.5, 1e-6);
        assert!((fd0 - -4.0).abs() < 1e-6 && (fd1 - 4.0).abs() < 1e-6);
        assert_eq!(tau, 1.0);
        assert!((d0 + 4.0).abs() < 1e-12);
        assert!((d1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn odds_ratio_domain() {
        for (a, b) in [(0.0, 0.5), (0.5, 1.0), (-0.1, 0.2), (0.3, 1.2)] {
            assert!(matches!(EffectDefinition::OddsRatio.evaluate(a, b), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn inversion() {
        let mu1 = EffectDefinition::OddsRatio.treated_mean_for(0.5, 2.0).unwrap();
        assert!((mu1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(EffectDefinition::DifferenceInMeans.treated_mean_for(1.5, 0.5).unwrap(), 2.0);
        assert!(EffectDefinition::OddsRatio.treated_mean_for(1.5, 2.0).is_err());
        assert!(EffectDefinition::OddsRatio.treated_mean_for(0.5, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn partials_match_finite_differences(mu0 in 0.05f64..0.95, mu1 in 0.05f64..0.95) {
            for effect in [EffectDefinition::DifferenceInMeans, EffectDefinition::OddsRatio] {
                let e = effect.evaluate(mu0, mu1).unwrap();
                let (fd0, fd1) = central_diff(effect, mu0, mu1, 1e-6);
                prop_assert!((e.d_mu0 - fd0).abs() <= 1e-6 * e.d_mu0.abs().max(1.0));
                prop_assert!((e.d_mu1 - fd1).abs() <= 1e-6 * e.d_mu1.abs().max(1.0));
                prop_assert!(e.d_mu0 <= 0.0 && e.d_mu1 >= 0.0);
            }
        }

        #[test]
        fn inversion_round_trips(mu0 in 0.05f64..0.95, tau in 0.1f64..10.0) {
            let effect = EffectDefinition::OddsRatio;
            let mu1 = effect.treated_mean_for(mu0, tau).unwrap();
            let back = effect.evaluate(mu0, mu1).unwrap().tau;
            prop_assert!((back - tau).abs() <= 1e-9 * tau);
        }
    }
}
