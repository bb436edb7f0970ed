//! Cross-fit augmented inverse propensity weighting.
//!
//! With known randomization probabilities `π_w` and out-of-fold predictions
//! `m_w(x_i)`, each arm mean is
//!
//! ```text
//! μ̂_w = mean_i [ W_w,i/π_w · (y_i − m_w(x_i)) + m_w(x_i) ]
//! ```
//!
//! and `τ̂ = r(μ̂0, μ̂1)`. The influence value of row `i` is
//! `r0' φ0,i + r1' φ1,i` with `φw,i` the centered summand above.

use super::data::TrialDataset;
use super::result::{finish, EstimateResult, Pieces};
use crate::error::{Error, Result};
use crate::learners::{FittedModel, Learner};
use crate::math::EffectDefinition;
use crate::rng;
use rayon::prelude::*;

/// True conditional means `μ_w(x)`, for the oracle estimator.
pub trait OracleMeans: Sync {
    fn conditional_mean(&self, arm: u8, x: &[f64]) -> f64;
}

/// [`OracleMeans`] backed by two closures.
pub struct FnOracle<F0, F1> {
    pub mu0: F0,
    pub mu1: F1,
}

impl<F0, F1> OracleMeans for FnOracle<F0, F1>
where
    F0: Fn(&[f64]) -> f64 + Sync,
    F1: Fn(&[f64]) -> f64 + Sync,
{
    fn conditional_mean(&self, arm: u8, x: &[f64]) -> f64 {
        if arm == 1 {
            (self.mu1)(x)
        } else {
            (self.mu0)(x)
        }
    }
}

const CROSSFIT_STREAM: u64 = 0xc405_5f17;

/// Cross-fit AIPW with `folds` arm-stratified folds.
///
/// For fold `k` and arm `w` the learner is trained on arm-`w` rows outside
/// fold `k` and predicts every row inside fold `k`.
pub fn estimate_aipw(
    data: &TrialDataset,
    effect: EffectDefinition,
    learner: &dyn Learner,
    folds: usize,
    alpha: f64,
    seed: u64,
) -> Result<EstimateResult> {
    super::check_alpha(alpha)?;
    if folds < 2 {
        return Err(Error::invalid("cross-fitting needs at least 2 folds"));
    }
    let n = data.len();
    let labels = rng::stratified_fold_labels(data.w(), folds, rng::derive(seed, CROSSFIT_STREAM));
    let mut fold_rows: Vec<Vec<usize>> = vec![Vec::new(); folds];
    let mut cell_sizes = vec![[0usize; 2]; folds];
    for i in 0..n {
        fold_rows[labels[i]].push(i);
        cell_sizes[labels[i]][data.w()[i] as usize] += 1;
    }
    for (k, sizes) in cell_sizes.iter().enumerate() {
        for arm in 0..=1u8 {
            if sizes[arm as usize] == 0 {
                return Err(Error::EmptyFoldArm { fold: k, arm, folds });
            }
        }
    }

    let jobs: Vec<(usize, u8)> = (0..folds).flat_map(|k| [(k, 0u8), (k, 1u8)]).collect();
    let fitted: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(k, arm)| {
            let train: Vec<usize> = (0..n).filter(|&i| labels[i] != k && data.w()[i] == arm).collect();
            let xt = data.x().select_rows(&train);
            let yt: Vec<f64> = train.iter().map(|&i| data.y()[i]).collect();
            let model: Box<dyn FittedModel> = learner.fit(&xt, &yt, rng::derive(seed, (2 * k + arm as usize) as u64))?;
            Ok(model.predict_rows(data.x(), &fold_rows[k]))
        })
        .collect::<Result<_>>()?;

    let mut pred = [vec![0.0; n], vec![0.0; n]];
    for (&(k, arm), values) in jobs.iter().zip(&fitted) {
        for (&i, &v) in fold_rows[k].iter().zip(values) {
            pred[arm as usize][i] = v;
        }
    }
    from_predictions(data, effect, &pred[0], &pred[1], alpha, "aipw")
}

/// AIPW with the true conditional means in place of fitted ones.
pub fn estimate_oracle_aipw(
    data: &TrialDataset,
    effect: EffectDefinition,
    oracle: &dyn OracleMeans,
    alpha: f64,
) -> Result<EstimateResult> {
    super::check_alpha(alpha)?;
    let pred0: Vec<f64> = data.x().rows().map(|x| oracle.conditional_mean(0, x)).collect();
    let pred1: Vec<f64> = data.x().rows().map(|x| oracle.conditional_mean(1, x)).collect();
    from_predictions(data, effect, &pred0, &pred1, alpha, "oracle")
}

fn from_predictions(
    data: &TrialDataset,
    effect: EffectDefinition,
    pred0: &[f64],
    pred1: &[f64],
    alpha: f64,
    label: &str,
) -> Result<EstimateResult> {
    let n = data.len();
    let pi = [data.design_pi(0), data.design_pi(1)];
    let preds = [pred0, pred1];
    let mut terms = [vec![0.0; n], vec![0.0; n]];
    let mut mu = [0.0; 2];
    for arm in 0..2 {
        for i in 0..n {
            let m = preds[arm][i];
            let t = if data.w()[i] as usize == arm { (data.y()[i] - m) / pi[arm] + m } else { m };
            terms[arm][i] = t;
            mu[arm] += t;
        }
        mu[arm] /= n as f64;
    }
    let r = effect.evaluate(mu[0], mu[1])?;
    let influence = (0..n)
        .map(|i| r.d_mu0 * (terms[0][i] - mu[0]) + r.d_mu1 * (terms[1][i] - mu[1]))
        .collect();
    let n1 = data.arm_size(1);
    finish(
        Pieces {
            estimator: label,
            effect,
            tau_hat: r.tau,
            mu0_hat: mu[0],
            mu1_hat: mu[1],
            influence,
            n0: n - n1,
            n1,
            scale: super::outcome_scale(data.y()),
        },
        alpha,
    )
}
