//! Asymptotic variances expressed through population parameters.

use crate::error::Result;
use crate::math::effect::EffectDefinition;
use crate::math::params::PopulationParams;

/// Asymptotic variance `ν*²` of any semiparametric efficient estimator of
/// `r(μ0, μ1)`:
///
/// ```text
/// r0'²(π1/π0 κ0² + σ0²) + r1'²(π0/π1 κ1² + σ1²) − 2|r0' r1'| γ √((σ0²−κ0²)(σ1²−κ1²))
/// ```
///
/// Each `σ_w² − κ_w²` is clamped at zero before the square root so that
/// estimated parameters with `κ̂ ≈ σ̂` stay real-valued.
///
/// Evaluated in the equivalent form
///
/// ```text
/// Σ_w r_w'² κ_w²/π_w + (|r0'| e0 − |r1'| e1)² + 2|r0' r1'| (1 − γ) e0 e1,   e_w = √(σ_w² − κ_w²)
/// ```
///
/// whose terms are all nonnegative, so small `κ` next to large `σ` does not
/// cancel away the significant digits.
pub fn efficient_variance(effect: EffectDefinition, params: &PopulationParams) -> Result<f64> {
    params.validate()?;
    let r = params.effect_at_means(effect)?;
    let p = params;
    let (a0, a1) = (r.d_mu0.abs(), r.d_mu1.abs());
    let gap0 = (p.sigma0 - p.kappa0) * (p.sigma0 + p.kappa0);
    let gap1 = (p.sigma1 - p.kappa1) * (p.sigma1 + p.kappa1);
    let (e0, e1) = (gap0.max(0.0).sqrt(), gap1.max(0.0).sqrt());
    let noise = a0 * a0 * p.kappa0 * p.kappa0 / p.pi0 + a1 * a1 * p.kappa1 * p.kappa1 / p.pi1;
    // A negative gap was clamped out of the square root but still counts linearly.
    let excess = a0 * a0 * gap0.min(0.0) + a1 * a1 * gap1.min(0.0);
    let spread = a0 * e0 - a1 * e1;
    Ok(noise + excess + spread * spread + 2.0 * a0 * a1 * (1.0 - p.gamma) * e0 * e1)
}

/// Asymptotic variance of the unadjusted plug-in estimator,
/// `r0'² σ0²/π0 + r1'² σ1²/π1`.
pub fn unadjusted_variance(effect: EffectDefinition, params: &PopulationParams) -> Result<f64> {
    params.validate()?;
    let r = params.effect_at_means(effect)?;
    let p = params;
    Ok(r.d_mu0 * r.d_mu0 * p.sigma0 * p.sigma0 / p.pi0 + r.d_mu1 * r.d_mu1 * p.sigma1 * p.sigma1 / p.pi1)
}
