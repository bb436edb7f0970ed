//! Counterfactual scenarios with quadratic conditional means, a replicate
//! engine for simulated trials, and power / type-I error grids.

mod engine;
mod grid;
mod scenario;

pub use engine::{
    analyze, empirical_rate, run_replication, simulate_trial, EstimatorConfig, PowerCurvePoint, ReplicationOutcome,
    MAX_ASSIGNMENT_RETRIES,
};
pub use grid::{
    cell_seed, default_estimators, experiment_grid, learner_variants, prospective_targets, write_points_csv,
    ExperimentConfig, ExperimentOutput, LearnerTarget, NGrid, ScenarioEntry, ScenarioTargets, DEFAULT_CROSSFIT_FOLDS,
};
pub use scenario::{
    sample_counterfactual, benchmark_scenario, true_params, CounterfactualSample, ScenarioName, ScenarioSpec, TrueParams,
};
