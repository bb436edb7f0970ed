use aipw_design::design::{estimate_population_params, plan_trial, HistoricalDataset};
use aipw_design::estimators::{
    estimate_aipw, estimate_ancova_hc0, estimate_unadjusted, EstimateResult, TrialDataset,
};
use aipw_design::io::{read_trial, write_trial};
use aipw_design::learners::{cv_mse, fit, FeatureTable, GbmParams, LearnerSpec};
use aipw_design::math::{
    efficient_variance, normal_quantile, power, required_sample_size, unadjusted_variance, DesignInputs,
    EffectDefinition, PopulationParams,
};
use aipw_design::rng;
use aipw_design::simulation::{empirical_rate, EstimatorConfig, ScenarioSpec};
use proptest::prelude::*;
use rand::Rng;

const DIFF: EffectDefinition = EffectDefinition::DifferenceInMeans;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn table(n: usize, d: usize, seed: u64) -> FeatureTable {
    let mut r = rng::seeded(seed);
    FeatureTable::new(n, d, (0..n * d).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap()
}

fn response(x: &FeatureTable, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(seed ^ 0xabc);
    x.rows().map(|row| row.iter().map(|v| v.sin() + 0.3 * v).sum::<f64>() + r.random_range(-1.0..1.0)).collect()
}

/// Balanced trial: the first half treated.
fn balanced_trial(half: usize, d: usize, seed: u64) -> TrialDataset {
    let n = 2 * half;
    let x = table(n, d, seed);
    let y = response(&x, seed);
    let w = (0..n).map(|i| (i < half) as u8).collect();
    TrialDataset::new(x, w, y, 0.5).unwrap()
}

fn arb_params() -> impl Strategy<Value = PopulationParams> {
    (0.1f64..5.0, 0.1f64..5.0, 0.0f64..1.0, 0.0f64..1.0, -1.0f64..1.0, 0.05f64..0.95).prop_map(
        |(s0, s1, f0, f1, gamma, pi1)| PopulationParams {
            sigma0: s0,
            sigma1: s1,
            kappa0: f0 * s0,
            kappa1: f1 * s1,
            gamma,
            pi0: 1.0 - pi1,
            pi1,
            mu0: 0.0,
            mu1: 0.5,
        },
    )
}

fn wald_consistent(r: &EstimateResult) -> bool {
    let crit = normal_quantile(1.0 - r.alpha / 2.0).unwrap();
    let z = (r.tau_hat - r.tau_null).abs() / r.se;
    r.significant == (z > crit) && r.significant == (r.p_value < r.alpha)
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn kappa_equal_sigma_reduces_to_unadjusted(p in arb_params()) {
        let mut p = p;
        p.kappa0 = p.sigma0;
        p.kappa1 = p.sigma1;
        let e = efficient_variance(DIFF, &p).unwrap();
        let u = unadjusted_variance(DIFF, &p).unwrap();
        prop_assert!((e - u).abs() <= 1e-12 * u.max(1.0));
    }

    #[test]
    fn symmetric_closed_form(s in 0.1f64..5.0, frac in 0.0f64..1.0, gamma in -1.0f64..1.0) {
        let k = frac * s;
        let p = PopulationParams { sigma0: s, sigma1: s, kappa0: k, kappa1: k, gamma, pi0: 0.5, pi1: 0.5, mu0: 0.0, mu1: 1.0 };
        let expected = 2.0 * ((1.0 - gamma) * s * s + (1.0 + gamma) * k * k);
        let e = efficient_variance(DIFF, &p).unwrap();
        prop_assert!((e - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn nonnegative_gamma_never_hurts(p in arb_params()) {
        let mut p = p;
        p.gamma = p.gamma.abs();
        prop_assert!(efficient_variance(DIFF, &p).unwrap() <= unadjusted_variance(DIFF, &p).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn power_is_monotone(n in 2u64..5000, dn in 1u64..500, delta in 0.01f64..2.0, nu in 0.2f64..5.0, scale in 1.0f64..3.0) {
        let p = power(n, delta, 0.0, nu, 0.05).unwrap();
        prop_assert!(power(n + dn, delta, 0.0, nu, 0.05).unwrap() >= p);
        prop_assert!(power(n, delta * scale, 0.0, nu, 0.05).unwrap() >= p);
        prop_assert!(power(n, delta, 0.0, nu / scale, 0.05).unwrap() >= p);
        prop_assert!((power(n, -delta, 0.0, nu, 0.05).unwrap() - p).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn sample_size_is_monotone(delta in 0.1f64..2.0, nu in 0.5f64..5.0, scale in 1.0f64..3.0) {
        let params = PopulationParams { sigma0: 1.0, sigma1: 1.0, kappa0: 1.0, kappa1: 1.0, gamma: 0.0, pi0: 0.5, pi1: 0.5, mu0: 0.0, mu1: delta };
        let inputs = DesignInputs { alpha: 0.05, target_power: 0.8, effect: DIFF, params };
        let bigger = DesignInputs { params: PopulationParams { mu1: delta * scale, ..params }, ..inputs };
        let n = required_sample_size(&inputs, nu, 1 << 40).unwrap();
        prop_assert!(required_sample_size(&bigger, nu, 1 << 40).unwrap() <= n);
        prop_assert!(required_sample_size(&inputs, nu * scale, 1 << 40).unwrap() >= n);
        prop_assert!(power(n, delta, 0.0, nu, 0.05).unwrap() > 0.8);
        prop_assert!(n == 2 || power(n - 1, delta, 0.0, nu, 0.05).unwrap() <= 0.8);
    }

    #[test]
    fn shared_estimates_give_smaller_aipw_design(s in 0.5f64..5.0, frac in 0.01f64..1.0, tau in 0.2f64..2.0) {
        let p = PopulationParams { sigma0: s, sigma1: s, kappa0: frac * s, kappa1: frac * s, gamma: 0.0, pi0: 0.5, pi1: 0.5, mu0: 0.0, mu1: tau };
        let r = plan_trial(&p, DIFF, 0.05, 0.8, u64::MAX / 4).unwrap();
        prop_assert!(r.nu_sq_aipw <= r.nu_sq_unadj);
        prop_assert!(r.n_aipw <= r.n_unadj);
        prop_assert_eq!(r.allocation_aipw.n0 + r.allocation_aipw.n1, r.n_aipw);
    }

    #[test]
    fn ols_ignores_zero_columns(n in 5usize..40, d in 1usize..4, seed: u64) {
        let x = table(n, d, seed);
        let y = response(&x, seed);
        let xz = x.with_column(&vec![0.0; n]).unwrap();
        let a = fit(&LearnerSpec::Ols, &x, &y, 0).unwrap();
        let b = fit(&LearnerSpec::Ols, &xz, &y, 0).unwrap();
        for (i, row) in x.rows().enumerate() {
            prop_assert_eq!(a.predict(row).to_bits(), b.predict(xz.row(i)).to_bits());
        }
    }

    #[test]
    fn knn_is_a_convex_combination(n in 1usize..40, k in 1usize..10, seed: u64) {
        let x = table(n, 2, seed);
        let y = response(&x, seed);
        let m = fit(&LearnerSpec::Knn { k }, &x, &y, 0).unwrap();
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for q in table(10, 2, seed.wrapping_add(1)).rows() {
            let p = m.predict(q);
            prop_assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
        }
    }

    #[test]
    fn gbm_training_error_nonincreasing(n in 2usize..60, d in 1usize..4, depth in 1usize..5, seed: u64) {
        let x = table(n, d, seed);
        let y = response(&x, seed);
        let params = GbmParams { n_trees: 20, max_depth: depth, ..GbmParams::default() };
        let m = aipw_design::learners::fit_gbm(&x, &y, &params);
        let mut prev = f64::INFINITY;
        for t in 0..=20 {
            let mse = x.rows().zip(&y).map(|(r, v)| (m.predict_staged(r, t) - v).powi(2)).sum::<f64>() / n as f64;
            prop_assert!(mse <= prev + 1e-12);
            prev = mse;
        }
    }

    #[test]
    fn learners_are_deterministic(n in 10usize..50, seed: u64, fit_seed: u64) {
        let x = table(n, 3, seed);
        let y = response(&x, seed);
        let spec = LearnerSpec::default_ensemble();
        let a = fit(&spec, &x, &y, fit_seed).unwrap();
        let b = fit(&spec, &x, &y, fit_seed).unwrap();
        for row in x.rows() {
            prop_assert_eq!(a.predict(row).to_bits(), b.predict(row).to_bits());
        }
    }

    #[test]
    fn ensemble_selects_the_argmin(n in 10usize..50, seed: u64) {
        let x = table(n, 2, seed);
        let y = response(&x, seed);
        let spec = LearnerSpec::default_ensemble();
        let (best, scores) = spec.select_member(&x, &y, seed).unwrap();
        for s in &scores {
            prop_assert!(scores[best] <= *s);
        }
        prop_assert!(scores[..best].iter().all(|s| *s > scores[best]));
    }

    #[test]
    fn influence_means_vanish(half in 3usize..30, d in 0usize..3, seed: u64) {
        let data = balanced_trial(half, d, seed);
        let results = [
            estimate_unadjusted(&data, DIFF, 0.05).unwrap(),
            estimate_aipw(&data, DIFF, &LearnerSpec::Ols, 2, 0.05, seed).unwrap(),
        ];
        for r in results {
            let m = r.influence.iter().sum::<f64>() / r.influence.len() as f64;
            prop_assert!(m.abs() < 1e-10, "{} mean {}", r.estimator, m);
        }
        if 2 * half > d + 2 {
            let r = estimate_ancova_hc0(&data, DIFF, 0.05).unwrap();
            let m = r.influence.iter().sum::<f64>() / r.influence.len() as f64;
            prop_assert!(m.abs() < 1e-10, "ancova mean {}", m);
        }
    }

    #[test]
    fn constant_learner_aipw_equals_unadjusted(half in 2usize..30, d in 0usize..3, seed: u64) {
        let data = balanced_trial(half, d, seed);
        let a = estimate_aipw(&data, DIFF, &LearnerSpec::Null, 2, 0.05, seed).unwrap();
        let u = estimate_unadjusted(&data, DIFF, 0.05).unwrap();
        prop_assert!((a.tau_hat - u.tau_hat).abs() < 1e-10);
    }

    #[test]
    fn ancova_without_covariates_is_unadjusted(n0 in 2usize..20, n1 in 2usize..20, seed: u64) {
        let n = n0 + n1;
        let mut r = rng::seeded(seed);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let w = (0..n).map(|i| (i < n1) as u8).collect();
        let data = TrialDataset::new(FeatureTable::empty_columns(n), w, y, 0.5).unwrap();
        let a = estimate_ancova_hc0(&data, DIFF, 0.05).unwrap();
        let u = estimate_unadjusted(&data, DIFF, 0.05).unwrap();
        prop_assert!((a.tau_hat - u.tau_hat).abs() < 1e-12);
    }

    #[test]
    fn wald_decisions_are_consistent(half in 3usize..30, alpha in 0.01f64..0.3, shift in -2.0f64..2.0, seed: u64) {
        let mut data = balanced_trial(half, 1, seed);
        let y: Vec<f64> = data.y().iter().zip(data.w()).map(|(v, &w)| v + shift * w as f64).collect();
        data = TrialDataset::new(data.x().clone(), data.w().to_vec(), y, 0.5).unwrap();
        for r in [
            estimate_unadjusted(&data, DIFF, alpha).unwrap(),
            estimate_ancova_hc0(&data, DIFF, alpha).unwrap(),
            estimate_aipw(&data, DIFF, &LearnerSpec::Knn { k: 3 }, 3, alpha, seed).unwrap(),
        ] {
            prop_assert!(wald_consistent(&r), "{:?}", r);
        }
    }

    #[test]
    fn parameter_estimates_ignore_row_order(n in 50usize..90, seed: u64, perm_seed: u64) {
        let x = table(n, 2, seed);
        let y = response(&x, seed);
        let mut order: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng::seeded(perm_seed));
        let a = HistoricalDataset::new(x.clone(), y.clone()).unwrap();
        let b = HistoricalDataset::new(x.select_rows(&order), order.iter().map(|&i| y[i]).collect()).unwrap();
        let ea = estimate_population_params(&a, &LearnerSpec::Ols, 5, 7, 0.5, DIFF, 0.5).unwrap();
        let eb = estimate_population_params(&b, &LearnerSpec::Ols, 5, 7, 0.5, DIFF, 0.5).unwrap();
        prop_assert_eq!(ea.cv_rmse.to_bits(), eb.cv_rmse.to_bits());
        prop_assert!((ea.params.sigma0 - eb.params.sigma0).abs() < 1e-12);
        prop_assert!(ea.params.kappa0 <= ea.params.sigma0);
    }

    #[test]
    fn kappa_never_exceeds_sigma(n in 50usize..80, k in 1usize..3, seed: u64) {
        let x = table(n, 3, seed);
        let mut r = rng::seeded(seed);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let h = HistoricalDataset::new(x, y).unwrap();
        let e = estimate_population_params(&h, &LearnerSpec::Knn { k }, 5, seed, 0.5, DIFF, 0.5).unwrap();
        prop_assert!(e.params.kappa0 <= e.params.sigma0);
        prop_assert_eq!(e.kappa_clamped, e.cv_rmse > e.sample_sd);
    }

    #[test]
    fn null_calibration_is_idempotent(d in 1usize..12, a0 in -2.0f64..2.0, a1 in -2.0f64..2.0, b0 in -2.0f64..2.0, c0 in -2.0f64..2.0, c1 in -2.0f64..2.0) {
        let s = ScenarioSpec { d, a0, b0, c0, a1, b1: 0.5, c1, noise_sd: 1.0 };
        let once = s.null_calibrated();
        prop_assert_eq!(once.null_calibrated(), once);
        prop_assert!(once.average_effect().abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_is_exact(n in 2usize..30, d in 0usize..4, seed: u64) {
        let x = table(n, d, seed);
        let mut r = rng::seeded(seed);
        let y: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 1e6 - 5e5).collect();
        let w: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let data = TrialDataset::new(x, w, y, 0.5).unwrap();
        let mut buf = Vec::new();
        write_trial(&data, &mut buf).unwrap();
        prop_assert_eq!(read_trial(buf.as_slice(), 0.5).unwrap().data, data);
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn empirical_rate_is_deterministic(base_seed: u64, n in 20usize..60) {
        let s = ScenarioSpec { d: 3, a0: 0.5, b0: 1.0, c0: 0.0, a1: 0.5, b1: 0.0, c1: 0.4, noise_sd: 1.0 };
        let cfg = EstimatorConfig::Aipw { learner: LearnerSpec::Ols, folds: 3 };
        let a = empirical_rate(&s, n, 0.5, &cfg, 0.05, 12, base_seed).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let b = pool.install(|| empirical_rate(&s, n, 0.5, &cfg, 0.05, 12, base_seed).unwrap());
        prop_assert_eq!(a, b);
    }
}

#[test]
fn pure_noise_cv_error() {
    let n = 5000;
    let x = table(n, 5, 1);
    let mut r = rng::seeded(2);
    let y: Vec<f64> = (0..n).map(|_| r.sample(rand_distr::StandardNormal)).collect();
    let mse = cv_mse(&LearnerSpec::default_ensemble(), &x, &y, 5, 3).unwrap();
    assert!((0.95..=1.10).contains(&mse), "{mse}");
    assert!((0.975..=1.05).contains(&mse.sqrt()));
}
