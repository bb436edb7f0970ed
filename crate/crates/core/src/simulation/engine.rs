use super::scenario::{sample_counterfactual, ScenarioSpec};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_aipw, estimate_ancova_hc0, estimate_oracle_aipw, estimate_unadjusted, EstimateResult, TrialDataset,
};
use crate::learners::LearnerSpec;
use crate::math::EffectDefinition;
use crate::rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Analysis applied to each simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorConfig {
    Unadjusted,
    AncovaHc0,
    Aipw { learner: LearnerSpec, folds: usize },
    OracleAipw,
}

impl EstimatorConfig {
    pub fn id(&self) -> &'static str {
        match self {
            EstimatorConfig::Unadjusted => "unadj",
            EstimatorConfig::AncovaHc0 => "ancova",
            EstimatorConfig::Aipw { .. } => "aipw",
            EstimatorConfig::OracleAipw => "oracle",
        }
    }

    /// Learner label for AIPW, empty otherwise.
    pub fn learner_label(&self) -> String {
        match self {
            EstimatorConfig::Aipw { learner, .. } => learner.label(),
            _ => String::new(),
        }
    }

    fn min_arm_size(&self) -> usize {
        match self {
            EstimatorConfig::Aipw { folds, .. } => (*folds).max(2),
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let EstimatorConfig::Aipw { learner, folds } = self {
            learner.validate()?;
            if *folds < 2 {
                return Err(Error::invalid("AIPW needs at least 2 cross-fitting folds"));
            }
        }
        Ok(())
    }
}

/// Upper bound on assignment redraws per replicate.
pub const MAX_ASSIGNMENT_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub result: EstimateResult,
    pub significant: bool,
    /// Number of discarded assignment vectors.
    pub assignment_retries: usize,
}

/// Draws `W_i ~ Bernoulli(pi1)` until both arms hold at least `min_arm` rows.
fn assign(n: usize, pi1: f64, min_arm: usize, seed: u64) -> Result<(Vec<u8>, usize)> {
    let mut r = rng::seeded(seed);
    for attempt in 0..=MAX_ASSIGNMENT_RETRIES {
        let w: Vec<u8> = (0..n).map(|_| r.random_bool(pi1) as u8).collect();
        let n1 = w.iter().filter(|&&v| v == 1).count();
        if n1 >= min_arm && n - n1 >= min_arm {
            return Ok((w, attempt));
        }
    }
    Err(Error::Degenerate(format!(
        "no assignment with at least {min_arm} rows per arm after {MAX_ASSIGNMENT_RETRIES} redraws (n = {n}, pi1 = {pi1})"
    )))
}

/// Builds the observed trial for one replicate: counterfactual rows, random
/// assignment, and `y = y_w`.
pub fn simulate_trial(spec: &ScenarioSpec, n: usize, pi1: f64, min_arm: usize, seed: u64) -> Result<(TrialDataset, usize)> {
    if n < 4 {
        return Err(Error::invalid(format!("simulated trials need n >= 4, got {n}")));
    }
    if !(pi1 > 0.0 && pi1 < 1.0) {
        return Err(Error::invalid(format!("pi1 must lie in (0,1), got {pi1}")));
    }
    let sample = sample_counterfactual(spec, n, rng::derive(seed, 0))?;
    let (w, retries) = assign(n, pi1, min_arm, rng::derive(seed, 1))?;
    let y = w.iter().enumerate().map(|(i, &wi)| if wi == 1 { sample.y1[i] } else { sample.y0[i] }).collect();
    Ok((TrialDataset::new(sample.x, w, y, pi1)?, retries))
}

pub fn analyze(data: &TrialDataset, spec: &ScenarioSpec, config: &EstimatorConfig, alpha: f64, seed: u64) -> Result<EstimateResult> {
    let effect = EffectDefinition::DifferenceInMeans;
    match config {
        EstimatorConfig::Unadjusted => estimate_unadjusted(data, effect, alpha),
        EstimatorConfig::AncovaHc0 => estimate_ancova_hc0(data, effect, alpha),
        EstimatorConfig::Aipw { learner, folds } => estimate_aipw(data, effect, learner, *folds, alpha, seed),
        EstimatorConfig::OracleAipw => estimate_oracle_aipw(data, effect, spec, alpha),
    }
}

/// One simulated trial analyzed with `config`. The influence vector is
/// dropped from the returned result.
pub fn run_replication(
    spec: &ScenarioSpec,
    n: usize,
    pi1: f64,
    config: &EstimatorConfig,
    alpha: f64,
    seed: u64,
) -> Result<ReplicationOutcome> {
    config.validate()?;
    let (data, retries) = simulate_trial(spec, n, pi1, config.min_arm_size(), seed)?;
    let mut result = analyze(&data, spec, config, alpha, rng::derive(seed, 2))?;
    result.influence = Vec::new();
    Ok(ReplicationOutcome { significant: result.significant, result, assignment_retries: retries })
}

/// Aggregated significance over replicates at a single sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurvePoint {
    pub scenario: String,
    pub estimator: String,
    pub learner: String,
    pub n: usize,
    pub reps: usize,
    pub significant_count: usize,
    pub rate: f64,
    /// `1.96·√(p̂(1−p̂)/reps)`.
    pub mc_half_width: f64,
    pub mean_tau_hat: f64,
    pub sd_tau_hat: f64,
    pub mean_se: f64,
    pub assignment_retries: usize,
}

/// Runs `reps` replicates with seeds `base_seed + i` (wrapping) and counts
/// significant results. Identical for serial and parallel execution.
#[allow(clippy::too_many_arguments)]
pub fn empirical_rate(
    spec: &ScenarioSpec,
    n: usize,
    pi1: f64,
    config: &EstimatorConfig,
    alpha: f64,
    reps: usize,
    base_seed: u64,
) -> Result<PowerCurvePoint> {
    if reps == 0 {
        return Err(Error::invalid("replications must be at least 1"));
    }
    let outcomes: Vec<ReplicationOutcome> = (0..reps)
        .into_par_iter()
        .map(|i| {
            run_replication(spec, n, pi1, config, alpha, base_seed.wrapping_add(i as u64))
                .map_err(|e| e.context(format!("replicate {i}")))
        })
        .collect::<Result<_>>()?;
    let significant_count = outcomes.iter().filter(|o| o.significant).count();
    let rate = significant_count as f64 / reps as f64;
    let mean_tau_hat = outcomes.iter().map(|o| o.result.tau_hat).sum::<f64>() / reps as f64;
    let sd_tau_hat = if reps > 1 {
        (outcomes.iter().map(|o| (o.result.tau_hat - mean_tau_hat).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(PowerCurvePoint {
        scenario: String::new(),
        estimator: config.id().to_string(),
        learner: config.learner_label(),
        n,
        reps,
        significant_count,
        rate,
        mc_half_width: 1.96 * (rate * (1.0 - rate) / reps as f64).sqrt(),
        mean_tau_hat,
        sd_tau_hat,
        mean_se: outcomes.iter().map(|o| o.result.se).sum::<f64>() / reps as f64,
        assignment_retries: outcomes.iter().map(|o| o.assignment_retries).sum(),
    })
}
