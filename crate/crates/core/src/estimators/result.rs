use crate::error::Result;
use crate::math::{normal_cdf, normal_quantile, EffectDefinition};
use serde::{Deserialize, Serialize};

/// Point estimate with Wald inference and per-subject influence values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimator: String,
    pub tau_hat: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub significant: bool,
    pub alpha: f64,
    pub tau_null: f64,
    pub mu0_hat: f64,
    pub mu1_hat: f64,
    pub n0: usize,
    pub n1: usize,
    /// Set when the standard error is numerically zero; the p-value is then
    /// 1 if `tau_hat` equals the null value and 0 otherwise.
    pub degenerate_se: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub influence: Vec<f64>,
}

impl EstimateResult {
    /// Sample mean of the squared influence values, the plug-in `ν̂²`.
    pub fn nu_sq_hat(&self) -> f64 {
        self.influence.iter().map(|v| v * v).sum::<f64>() / self.influence.len() as f64
    }
}

pub(crate) struct Pieces<'a> {
    pub estimator: &'a str,
    pub effect: EffectDefinition,
    pub tau_hat: f64,
    pub mu0_hat: f64,
    pub mu1_hat: f64,
    pub influence: Vec<f64>,
    pub n0: usize,
    pub n1: usize,
    /// Magnitude of the outcomes, used to recognize a numerically zero SE.
    pub scale: f64,
}

/// Standard error `√(mean(φ²)/n)`, two-sided Wald CI and p-value.
pub(crate) fn finish(p: Pieces<'_>, alpha: f64) -> Result<EstimateResult> {
    let n = p.influence.len() as f64;
    let se = (p.influence.iter().map(|v| v * v).sum::<f64>() / n / n).sqrt();
    let tau_null = p.effect.null_value();
    let z_crit = normal_quantile(1.0 - alpha / 2.0)?;
    let tiny = 1e-13 * p.scale.max(1.0);
    let degenerate_se = !(se > tiny);
    let (p_value, ci_low, ci_high) = if degenerate_se {
        let p_value = if (p.tau_hat - tau_null).abs() <= tiny { 1.0 } else { 0.0 };
        (p_value, p.tau_hat, p.tau_hat)
    } else {
        let z = (p.tau_hat - tau_null) / se;
        (2.0 * normal_cdf(-z.abs()), p.tau_hat - z_crit * se, p.tau_hat + z_crit * se)
    };
    Ok(EstimateResult {
        estimator: p.estimator.to_string(),
        tau_hat: p.tau_hat,
        se,
        ci_low,
        ci_high,
        p_value,
        significant: p_value < alpha,
        alpha,
        tau_null,
        mu0_hat: p.mu0_hat,
        mu1_hat: p.mu1_hat,
        n0: p.n0,
        n1: p.n1,
        degenerate_se,
        influence: p.influence,
    })
}
