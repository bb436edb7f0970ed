//! Wald-test power and the minimal enrollment reaching a target power.

use crate::error::{Error, Result};
use crate::math::normal::{normal_cdf, normal_quantile};
use crate::math::params::DesignInputs;

/// Power of the two-sided level-`alpha` Wald test when
/// `τ̂ ~ N(tau, nu²/n)` and the null is `tau_null`:
///
/// `Φ(Φ⁻¹(α/2) + √n Δ/ν) + Φ(Φ⁻¹(α/2) − √n Δ/ν)`, `Δ = tau − tau_null`.
pub fn power(n: u64, tau: f64, tau_null: f64, nu: f64, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::domain(format!("nu must be positive and finite, got {nu}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let crit = normal_quantile(alpha / 2.0)?;
    Ok(power_with_critical(n, tau - tau_null, nu, crit))
}

fn power_with_critical(n: u64, delta: f64, nu: f64, crit: f64) -> f64 {
    let shift = (n as f64).sqrt() * delta / nu;
    normal_cdf(crit + shift) + normal_cdf(crit - shift)
}

/// Smallest `n ≥ 2` with `power(n, …) > target_power`.
///
/// Power is strictly increasing in `n` whenever `Δ ≠ 0`, so a doubling
/// bracket followed by integer bisection finds the exact minimum.
pub fn required_sample_size(inputs: &DesignInputs, nu: f64, max_n: u64) -> Result<u64> {
    inputs.validate()?;
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Degenerate(format!(
            "asymptotic standard deviation must be positive, got {nu}; check that kappa > 0"
        )));
    }
    if max_n < 2 {
        return Err(Error::invalid("max_n must be at least 2"));
    }
    let delta = inputs.params.effect_shift(inputs.effect)?;
    let crit = normal_quantile(inputs.alpha / 2.0)?;
    let target = inputs.target_power;
    let reaches = |n: u64| power_with_critical(n, delta, nu, crit) > target;

    if !reaches(max_n) {
        return Err(Error::Infeasible {
            max_n,
            power_at_max: power_with_critical(max_n, delta, nu, crit),
            target_power: target,
        });
    }
    if reaches(2) {
        return Ok(2);
    }
    // Invariant: !reaches(lo) && reaches(hi).
    let mut lo = 2u64;
    let mut hi = 4u64.min(max_n);
    while !reaches(hi) {
        lo = hi;
        hi = hi.saturating_mul(2).min(max_n);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
