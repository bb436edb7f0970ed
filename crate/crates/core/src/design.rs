//! Prospective planning: population parameters from historical control data,
//! then the asymptotic variances and enrollment targets for the AIPW and the
//! unadjusted analyses.

use crate::error::{Error, Result};
use crate::learners::{cv_rmse, FeatureTable, LearnerSpec};
use crate::math::{
    efficient_variance, power, required_sample_size, unadjusted_variance, DesignInputs, EffectDefinition,
    PopulationParams,
};
use crate::SCHEMA_VERSION;
use serde::{Deserialize, Serialize};

/// Control / standard-of-care observations `(x, y0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalDataset {
    x: FeatureTable,
    y0: Vec<f64>,
}

impl HistoricalDataset {
    pub fn new(x: FeatureTable, y0: Vec<f64>) -> Result<Self> {
        if x.n_rows() != y0.len() {
            return Err(Error::invalid("historical covariates and outcomes differ in length"));
        }
        if let Some(i) = y0.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("historical row {i}: y0 must be finite")));
        }
        Ok(HistoricalDataset { x, y0 })
    }

    pub fn len(&self) -> usize {
        self.y0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y0.is_empty()
    }

    pub fn x(&self) -> &FeatureTable {
        &self.x
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    /// Rows sorted by `(y0, x)` so downstream results do not depend on the
    /// order rows were supplied in.
    fn canonical(&self) -> HistoricalDataset {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.y0[a].total_cmp(&self.y0[b]).then_with(|| {
                self.x
                    .row(a)
                    .iter()
                    .zip(self.x.row(b))
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        HistoricalDataset { x: self.x.select_rows(&idx), y0: idx.iter().map(|&i| self.y0[i]).collect() }
    }
}

/// Sample mean and standard deviation (denominator `n − 1`).
pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 })
}

/// Output of [`estimate_population_params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub schema_version: u32,
    pub params: PopulationParams,
    pub effect: EffectDefinition,
    pub target_effect: f64,
    pub n_historical: usize,
    pub learner: String,
    pub folds: usize,
    pub sample_sd: f64,
    /// Cross-validated RMSE before clamping to `sample_sd`.
    pub cv_rmse: f64,
    pub kappa_clamped: bool,
    pub assumptions: Vec<String>,
    pub warnings: Vec<String>,
}

/// Estimates the inputs of the efficiency bound from control-arm data:
/// `σ̂0 = σ̂1 = sd(y0)`, `κ̂0 = κ̂1 = CV RMSE of learner on (X, y0)`,
/// `γ̂ = 0`, `μ0 = mean(y0)` and `μ1` chosen so that `r(μ0, μ1) = target_tau`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_population_params(
    hist: &HistoricalDataset,
    learner: &LearnerSpec,
    folds: usize,
    seed: u64,
    target_tau: f64,
    effect: EffectDefinition,
    pi1: f64,
) -> Result<ParamEstimate> {
    if folds < 2 {
        return Err(Error::invalid("parameter estimation needs at least 2 folds"));
    }
    if !(pi1 > 0.0 && pi1 < 1.0) {
        return Err(Error::invalid(format!("pi1 must lie in (0,1), got {pi1}")));
    }
    if hist.is_empty() {
        return Err(Error::invalid("historical dataset is empty"));
    }
    let (mu0, sd) = mean_and_sd(hist.y0());
    if !(sd > 0.0) {
        return Err(Error::Degenerate(format!(
            "historical outcomes have zero standard deviation over {} rows; the data cannot inform the variance",
            hist.len()
        )));
    }
    if hist.len() < 10 * folds {
        return Err(Error::invalid(format!(
            "historical dataset has {} rows; at least {} are needed for {folds}-fold nested cross-validation",
            hist.len(),
            10 * folds
        )));
    }
    let mu1 = effect.treated_mean_for(mu0, target_tau)?;
    let canonical = hist.canonical();
    let rmse = cv_rmse(learner, canonical.x(), canonical.y0(), folds, seed)?;
    let mut warnings = Vec::new();
    let kappa_clamped = rmse > sd;
    if kappa_clamped {
        warnings.push(format!(
            "cross-validated RMSE {rmse:.6} exceeds the marginal SD {sd:.6}; kappa clamped to the marginal SD"
        ));
    }
    let kappa = rmse.min(sd);
    let params = PopulationParams {
        sigma0: sd,
        sigma1: sd,
        kappa0: kappa,
        kappa1: kappa,
        gamma: 0.0,
        pi0: 1.0 - pi1,
        pi1,
        mu0,
        mu1,
    };
    params.validate()?;
    let assumptions = vec![
        "sigma1 = sigma0 (estimated from historical control outcomes)".to_string(),
        "kappa1 = kappa0 (cross-validated RMSE of the control-outcome model)".to_string(),
        "gamma = 0 (conservative; gamma >= 0 assumed)".to_string(),
        format!("target effect {target_tau} ({effect}) sets mu1 = {mu1}"),
    ];
    Ok(ParamEstimate {
        schema_version: SCHEMA_VERSION,
        params,
        effect,
        target_effect: target_tau,
        n_historical: hist.len(),
        learner: learner.label(),
        folds,
        sample_sd: sd,
        cv_rmse: rmse,
        kappa_clamped,
        assumptions,
        warnings,
    })
}

/// User-supplied replacements for the default assumptions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamOverrides {
    pub gamma: Option<f64>,
    pub sigma1: Option<f64>,
    pub kappa1: Option<f64>,
}

impl ParamOverrides {
    pub fn apply(&self, params: &PopulationParams) -> Result<PopulationParams> {
        let mut p = *params;
        if let Some(g) = self.gamma {
            if !(-1.0..=1.0).contains(&g) {
                return Err(Error::invalid(format!("gamma override must lie in [-1, 1], got {g}")));
            }
            p.gamma = g;
        }
        if let Some(s) = self.sigma1 {
            p.sigma1 = s;
        }
        if let Some(k) = self.kappa1 {
            p.kappa1 = k;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmAllocation {
    pub n0: u64,
    pub n1: u64,
}

/// Splits `n` as `round(n·π_w)` per arm, the remainder going to the arm with
/// the larger fraction (arm 1 on ties).
pub fn allocate(n: u64, pi1: f64) -> ArmAllocation {
    let mut n1 = (n as f64 * pi1).round() as u64;
    let mut n0 = (n as f64 * (1.0 - pi1)).round() as u64;
    while n0 + n1 > n {
        if pi1 >= 0.5 {
            n0 -= 1;
        } else {
            n1 -= 1;
        }
    }
    while n0 + n1 < n {
        if pi1 >= 0.5 {
            n1 += 1;
        } else {
            n0 += 1;
        }
    }
    ArmAllocation { n0, n1 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub schema_version: u32,
    pub effect: EffectDefinition,
    pub alpha: f64,
    pub target_power: f64,
    pub params_hat: PopulationParams,
    pub tau: f64,
    pub tau_null: f64,
    pub nu_sq_aipw: f64,
    pub nu_sq_unadj: f64,
    pub n_aipw: u64,
    pub n_unadj: u64,
    pub allocation_aipw: ArmAllocation,
    pub allocation_unadj: ArmAllocation,
    pub power_at_n_aipw: f64,
    pub power_at_n_unadj: f64,
    /// `1 − n_aipw / n_unadj`.
    pub savings_fraction: f64,
    pub assumptions: Vec<String>,
}

/// Enrollment targets for the AIPW analysis (efficiency bound) and the
/// unadjusted analysis under the same parameters.
pub fn plan_trial(
    params: &PopulationParams,
    effect: EffectDefinition,
    alpha: f64,
    target_power: f64,
    max_n: u64,
) -> Result<DesignReport> {
    let inputs = DesignInputs { alpha, target_power, effect, params: *params };
    inputs.validate()?;
    let nu_sq_aipw = efficient_variance(effect, params)?;
    let nu_sq_unadj = unadjusted_variance(effect, params)?;
    if !(nu_sq_unadj > 0.0) {
        return Err(Error::Degenerate("marginal outcome variance is zero; sigma must be positive".into()));
    }
    if !(nu_sq_aipw > 1e-12 * nu_sq_unadj) {
        return Err(Error::Degenerate(format!(
            "efficiency-bound variance is {nu_sq_aipw:e}; outcomes would be perfectly predictable. Supply kappa > 0"
        )));
    }
    let r = params.effect_at_means(effect)?;
    let n_aipw = required_sample_size(&inputs, nu_sq_aipw.sqrt(), max_n)?;
    let n_unadj = required_sample_size(&inputs, nu_sq_unadj.sqrt(), max_n)?;
    let tau_null = effect.null_value();

    let mut assumptions = vec![
        format!("target effect tau = {} ({effect}), null value {tau_null}", r.tau),
        format!("two-sided alpha = {alpha}, target power = {target_power}"),
        format!("allocation pi1 = {}", params.pi1),
        "arm sizes round n*pi_w with the remainder given to the larger arm".to_string(),
    ];
    if params.sigma1 == params.sigma0 {
        assumptions.push("sigma1 = sigma0".into());
    }
    if params.kappa1 == params.kappa0 {
        assumptions.push("kappa1 = kappa0".into());
    }
    assumptions.push(format!("gamma = {}", params.gamma));

    Ok(DesignReport {
        schema_version: SCHEMA_VERSION,
        effect,
        alpha,
        target_power,
        params_hat: *params,
        tau: r.tau,
        tau_null,
        nu_sq_aipw,
        nu_sq_unadj,
        n_aipw,
        n_unadj,
        allocation_aipw: allocate(n_aipw, params.pi1),
        allocation_unadj: allocate(n_unadj, params.pi1),
        power_at_n_aipw: power(n_aipw, r.tau, tau_null, nu_sq_aipw.sqrt(), alpha)?,
        power_at_n_unadj: power(n_unadj, r.tau, tau_null, nu_sq_unadj.sqrt(), alpha)?,
        savings_fraction: 1.0 - n_aipw as f64 / n_unadj as f64,
        assumptions,
    })
}
