//! Large-sample checks of the design and estimation pipeline against
//! analytic moments.

use aipw_design::design::{estimate_population_params, mean_and_sd, HistoricalDataset};
use aipw_design::estimators::estimate_oracle_aipw;
use aipw_design::learners::{FeatureTable, LearnerSpec};
use aipw_design::math::{efficient_variance, EffectDefinition};
use aipw_design::rng;
use aipw_design::simulation::{
    sample_counterfactual, simulate_trial, benchmark_scenario, true_params, ScenarioName,
};
use rand::Rng;
use rand_distr::StandardNormal;

const DIFF: EffectDefinition = EffectDefinition::DifferenceInMeans;

#[test]
fn noise_history_gives_kappa_near_sigma() {
    let n = 10_000;
    let mut r = rng::seeded(11);
    let x = FeatureTable::new(n, 10, (0..n * 10).map(|_| r.random_range(-1.0..=1.0)).collect()).unwrap();
    let y: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
    let h = HistoricalDataset::new(x, y).unwrap();
    let e = estimate_population_params(&h, &LearnerSpec::default_ensemble(), 5, 3, 0.5, DIFF, 0.5).unwrap();
    assert!((0.97..=1.03).contains(&e.params.sigma0), "sigma {}", e.params.sigma0);
    assert!((0.97..=1.06).contains(&e.params.kappa0), "kappa {}", e.params.kappa0);
    assert!(e.params.kappa0 <= e.params.sigma0);
}

#[test]
fn linear_control_arm_history() {
    let spec = benchmark_scenario(ScenarioName::LinearConstant);
    let s = sample_counterfactual(&spec, 10_000, 21).unwrap();
    let h = HistoricalDataset::new(s.x, s.y0).unwrap();
    let e = estimate_population_params(&h, &LearnerSpec::default_ensemble(), 5, 4, 0.5, DIFF, 0.5).unwrap();
    let sigma = (10.0f64 / 3.0 + 1.0).sqrt();
    assert!((e.params.sigma0 - sigma).abs() <= 0.05, "sigma {}", e.params.sigma0);
    assert!((0.98..=1.15).contains(&e.params.kappa0), "kappa {}", e.params.kappa0);
}

/// A discrete covariate splits the population; averaging within-group
/// variances can only overstate the irreducible noise.
#[test]
fn subgroup_variance_average_bounds_kappa() {
    let n = 200_000;
    let noise = 0.8;
    let weights = [0.5, 0.3, 0.2];
    let offsets = [0.0, 1.5, -2.0];
    let mut r = rng::seeded(5);
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); 3];
    for _ in 0..n {
        let u: f64 = r.random();
        let g = if u < weights[0] { 0 } else if u < weights[0] + weights[1] { 1 } else { 2 };
        let z: f64 = r.random_range(-1.0..=1.0);
        let e: f64 = r.sample(StandardNormal);
        groups[g].push(offsets[g] + (1.0 + g as f64) * z + noise * e);
    }
    let mut avg = 0.0;
    for g in &groups {
        let (_, sd) = mean_and_sd(g);
        avg += g.len() as f64 / n as f64 * sd * sd;
    }
    // Within group g the mean varies by (1+g)z, Var = (1+g)²/3.
    let expected: f64 = weights.iter().enumerate().map(|(g, w)| w * ((1.0 + g as f64).powi(2) / 3.0 + noise * noise)).sum();
    assert!(avg >= noise * noise);
    assert!((avg - expected).abs() < 0.02 * expected, "{avg} vs {expected}");
}

#[test]
fn oracle_standard_error_matches_efficient_variance() {
    let n = 100_000;
    for (i, name) in ScenarioName::ALL.into_iter().enumerate() {
        let spec = benchmark_scenario(name);
        let truth = true_params(&spec, 0.5, 1_000_000, 100 + i as u64).unwrap();
        let bound = efficient_variance(DIFF, &truth.params).unwrap();
        let (data, _) = simulate_trial(&spec, n, 0.5, 2, 200 + i as u64).unwrap();
        let r = estimate_oracle_aipw(&data, DIFF, &spec, 0.05).unwrap();
        let scaled = r.se * r.se * n as f64;
        assert!((scaled / bound - 1.0).abs() < 0.03, "{name}: n·se² {scaled} vs {bound}");
    }
}
