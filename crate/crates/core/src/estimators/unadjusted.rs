use super::data::TrialDataset;
use super::result::{finish, EstimateResult, Pieces};
use crate::error::Result;
use crate::math::EffectDefinition;

/// Plug-in `r(ȳ0, ȳ1)` of the arm means, with influence values built from the
/// empirical arm fractions.
pub fn estimate_unadjusted(data: &TrialDataset, effect: EffectDefinition, alpha: f64) -> Result<EstimateResult> {
    super::check_alpha(alpha)?;
    let n = data.len();
    let (w, y) = (data.w(), data.y());
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for (&wi, &yi) in w.iter().zip(y) {
        sums[wi as usize] += yi;
        counts[wi as usize] += 1;
    }
    let mu = [sums[0] / counts[0] as f64, sums[1] / counts[1] as f64];
    let r = effect.evaluate(mu[0], mu[1])?;
    let pi_hat = [counts[0] as f64 / n as f64, counts[1] as f64 / n as f64];
    let influence = w
        .iter()
        .zip(y)
        .map(|(&wi, &yi)| {
            let a = wi as usize;
            let phi = (yi - mu[a]) / pi_hat[a];
            if a == 1 {
                r.d_mu1 * phi
            } else {
                r.d_mu0 * phi
            }
        })
        .collect();
    finish(
        Pieces {
            estimator: "unadj",
            effect,
            tau_hat: r.tau,
            mu0_hat: mu[0],
            mu1_hat: mu[1],
            influence,
            n0: counts[0],
            n1: counts[1],
            scale: super::outcome_scale(y),
        },
        alpha,
    )
}
