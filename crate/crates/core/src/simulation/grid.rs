use super::engine::{empirical_rate, EstimatorConfig, PowerCurvePoint};
use super::scenario::{sample_counterfactual, benchmark_scenario, true_params, ScenarioName, ScenarioSpec, TrueParams};
use crate::design::{estimate_population_params, mean_and_sd, plan_trial, HistoricalDataset};
use crate::error::{Error, Result};
use crate::learners::LearnerSpec;
use crate::math::{efficient_variance, required_sample_size, unadjusted_variance, DesignInputs, EffectDefinition};
use crate::rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

const DIFF: EffectDefinition = EffectDefinition::DifferenceInMeans;
const TRUE_STREAM: u64 = 0x7a0e;
const HIST_STREAM: u64 = 0x4157;
const DESIGN_STREAM: u64 = 0xde51;
const GRID_STREAM: u64 = 0x9e1d;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub name: String,
    pub spec: ScenarioSpec,
}

impl ScenarioEntry {
    pub fn benchmark(name: ScenarioName) -> Self {
        ScenarioEntry { name: name.to_string(), spec: benchmark_scenario(name) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NGrid {
    /// `points` sizes spaced geometrically over `[low, high]·n_unadj`, where
    /// `n_unadj` is the prospective unadjusted enrollment target.
    Auto { points: usize, low: f64, high: f64 },
    Explicit { sizes: Vec<usize> },
}

impl Default for NGrid {
    fn default() -> Self {
        NGrid::Auto { points: 8, low: 0.4, high: 1.4 }
    }
}

impl NGrid {
    pub fn resolve(&self, n_unadj: Option<u64>) -> Result<Vec<usize>> {
        match self {
            NGrid::Explicit { sizes } => Ok(sizes.clone()),
            NGrid::Auto { points, low, high } => {
                let base = n_unadj.ok_or_else(|| {
                    Error::invalid("automatic n-grid needs a feasible unadjusted target; pass explicit sizes")
                })? as f64;
                if *points == 0 {
                    return Ok(Vec::new());
                }
                if !(*low > 0.0 && high >= low) {
                    return Err(Error::invalid("automatic n-grid needs 0 < low <= high"));
                }
                let mut sizes: Vec<usize> = (0..*points)
                    .map(|i| {
                        let t = if *points == 1 { 0.0 } else { i as f64 / (*points - 1) as f64 };
                        let v = base * low * (high / low).powf(t);
                        (v.round() as usize).max(4)
                    })
                    .collect();
                sizes.dedup();
                Ok(sizes)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenarios: Vec<ScenarioEntry>,
    pub estimators: Vec<EstimatorConfig>,
    pub n_grid: NGrid,
    pub reps: usize,
    pub alpha: f64,
    pub pi1: f64,
    pub target_power: f64,
    pub seed: u64,
    /// Simulate under the null-calibrated scenarios (type-I error mode).
    /// Enrollment targets still come from the original scenarios.
    pub null: bool,
    /// Size of the historical control sample used for prospective targets.
    pub historical_n: usize,
    pub design_folds: usize,
    pub true_mc_reps: usize,
    pub max_n: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenarios: ScenarioName::ALL.iter().map(|&n| ScenarioEntry::benchmark(n)).collect(),
            estimators: default_estimators(),
            n_grid: NGrid::default(),
            reps: 1000,
            alpha: 0.05,
            pi1: 0.5,
            target_power: 0.8,
            seed: 0,
            null: false,
            historical_n: 10_000,
            design_folds: 5,
            true_mc_reps: 1_000_000,
            max_n: 1_000_000,
        }
    }
}

/// Default number of AIPW cross-fitting folds.
pub const DEFAULT_CROSSFIT_FOLDS: usize = 10;

/// Unadjusted, ANCOVA, AIPW (ensemble) and oracle AIPW.
pub fn default_estimators() -> Vec<EstimatorConfig> {
    vec![
        EstimatorConfig::Unadjusted,
        EstimatorConfig::AncovaHc0,
        EstimatorConfig::Aipw { learner: LearnerSpec::default_ensemble(), folds: DEFAULT_CROSSFIT_FOLDS },
        EstimatorConfig::OracleAipw,
    ]
}

/// AIPW with each learner: ensemble, boosting, kNN and linear regression.
pub fn learner_variants() -> Vec<EstimatorConfig> {
    [LearnerSpec::default_ensemble(), LearnerSpec::Gbm(Default::default()), LearnerSpec::Knn { k: 5 }, LearnerSpec::Ols]
        .into_iter()
        .map(|learner| EstimatorConfig::Aipw { learner, folds: DEFAULT_CROSSFIT_FOLDS })
        .collect()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.pi1 > 0.0 && self.pi1 < 1.0) {
            return Err(Error::invalid(format!("pi1 must lie in (0,1), got {}", self.pi1)));
        }
        if !(self.target_power > self.alpha && self.target_power < 1.0) {
            return Err(Error::invalid("target power must lie in (alpha, 1)"));
        }
        for s in &self.scenarios {
            s.spec.validate().map_err(|e| e.context(&s.name))?;
        }
        for e in &self.estimators {
            e.validate()?;
        }
        if let NGrid::Explicit { sizes } = &self.n_grid {
            if let Some(n) = sizes.iter().find(|&&n| n < 4) {
                return Err(Error::invalid(format!("n-grid sizes must be at least 4, got {n}")));
            }
        }
        Ok(())
    }
}

/// Prospective enrollment target for one learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerTarget {
    pub learner: String,
    pub kappa_hat: f64,
    pub n_aipw: Option<u64>,
}

/// Vertical-line targets for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTargets {
    pub scenario: String,
    pub tau: f64,
    pub true_params: TrueParams,
    pub nu_sq_oracle: f64,
    /// From the true parameters.
    pub n_oracle: Option<u64>,
    pub sigma_hat: f64,
    /// From the historical sample, `σ̂` only.
    pub n_unadj: Option<u64>,
    /// From the historical sample, one per AIPW learner.
    pub n_aipw: Vec<LearnerTarget>,
}

impl ScenarioTargets {
    pub fn n_aipw_for(&self, learner: &str) -> Option<u64> {
        self.n_aipw.iter().find(|t| t.learner == learner).and_then(|t| t.n_aipw)
    }
}

fn feasible(r: Result<u64>) -> Result<Option<u64>> {
    match r {
        Ok(n) => Ok(Some(n)),
        Err(Error::Infeasible { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Computes the oracle, unadjusted and per-learner AIPW enrollment targets
/// for `spec`, the last two from a fresh historical control sample.
pub fn prospective_targets(
    name: &str,
    spec: &ScenarioSpec,
    learners: &[LearnerSpec],
    config: &ExperimentConfig,
    stream: u64,
) -> Result<ScenarioTargets> {
    let truth = true_params(spec, config.pi1, config.true_mc_reps, rng::derive(config.seed, TRUE_STREAM ^ stream))?;
    let inputs = DesignInputs { alpha: config.alpha, target_power: config.target_power, effect: DIFF, params: truth.params };
    let nu_sq_oracle = efficient_variance(DIFF, &truth.params)?;
    let n_oracle = feasible(required_sample_size(&inputs, nu_sq_oracle.sqrt(), config.max_n))?;

    let sample = sample_counterfactual(spec, config.historical_n, rng::derive(config.seed, HIST_STREAM ^ stream))?;
    let hist = HistoricalDataset::new(sample.x, sample.y0)?;
    let (_, sigma_hat) = mean_and_sd(hist.y0());
    let mut unadj_params = truth.params;
    unadj_params.sigma0 = sigma_hat;
    unadj_params.sigma1 = sigma_hat;
    unadj_params.kappa0 = sigma_hat;
    unadj_params.kappa1 = sigma_hat;
    let nu_unadj = unadjusted_variance(DIFF, &unadj_params)?.sqrt();
    let n_unadj = feasible(required_sample_size(&DesignInputs { params: unadj_params, ..inputs }, nu_unadj, config.max_n))?;

    let mut n_aipw = Vec::new();
    for learner in learners {
        let est = estimate_population_params(
            &hist,
            learner,
            config.design_folds,
            rng::derive(config.seed, DESIGN_STREAM ^ stream),
            truth.tau,
            DIFF,
            config.pi1,
        )?;
        let n = match plan_trial(&est.params, DIFF, config.alpha, config.target_power, config.max_n) {
            Ok(report) => Some(report.n_aipw),
            Err(Error::Infeasible { .. }) => None,
            Err(e) => return Err(e),
        };
        n_aipw.push(LearnerTarget { learner: learner.label(), kappa_hat: est.params.kappa0, n_aipw: n });
    }
    Ok(ScenarioTargets {
        scenario: name.to_string(),
        tau: truth.tau,
        true_params: truth,
        nu_sq_oracle,
        n_oracle,
        sigma_hat,
        n_unadj,
        n_aipw,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub points: Vec<PowerCurvePoint>,
    pub targets: Vec<ScenarioTargets>,
}

/// Seed shared by every estimator at one `(scenario, n)` cell, so all
/// estimators see the same simulated trials.
pub fn cell_seed(seed: u64, scenario_index: usize, n: usize) -> u64 {
    rng::derive(rng::derive(seed, GRID_STREAM ^ scenario_index as u64), n as u64)
}

/// Scenarios × n-grid × estimators.
pub fn experiment_grid(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut learners: Vec<LearnerSpec> = Vec::new();
    for e in &config.estimators {
        if let EstimatorConfig::Aipw { learner, .. } = e {
            if !learners.contains(learner) {
                learners.push(learner.clone());
            }
        }
    }
    let mut points = Vec::new();
    let mut targets = Vec::new();
    for (idx, entry) in config.scenarios.iter().enumerate() {
        let t = prospective_targets(&entry.name, &entry.spec, &learners, config, idx as u64)
            .map_err(|e| e.context(&entry.name))?;
        let sizes = config.n_grid.resolve(t.n_unadj)?;
        let sim_spec = if config.null { entry.spec.null_calibrated() } else { entry.spec };
        for &n in &sizes {
            for est in &config.estimators {
                let mut p = empirical_rate(
                    &sim_spec,
                    n,
                    config.pi1,
                    est,
                    config.alpha,
                    config.reps,
                    cell_seed(config.seed, idx, n),
                )
                .map_err(|e| e.context(format!("{} n={n} {}", entry.name, est.id())))?;
                p.scenario = entry.name.clone();
                points.push(p);
            }
        }
        targets.push(t);
    }
    Ok(ExperimentOutput { points, targets })
}

/// One header row plus one row per point.
pub fn write_points_csv<W: Write>(points: &[PowerCurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if points.is_empty() {
        w.write_record([
            "scenario",
            "estimator",
            "learner",
            "n",
            "reps",
            "significant_count",
            "rate",
            "mc_half_width",
            "mean_tau_hat",
            "sd_tau_hat",
            "mean_se",
            "assignment_retries",
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    for p in points {
        w.serialize(p).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))
}
