use super::data::TrialDataset;
use super::result::{finish, EstimateResult, Pieces};
use crate::error::{Error, Result};
use crate::learners::linalg::factor_with_ridge;
use crate::math::EffectDefinition;
use nalgebra::{DMatrix, DVector};

/// Main-terms ANCOVA: OLS of `y` on `[1, w, x_1..x_d]`, effect = coefficient
/// on `w`, with the HC0 sandwich `(XᵀX)⁻¹ Xᵀ diag(e²) X (XᵀX)⁻¹`.
///
/// The reported influence values are `φ_i = n [(XᵀX)⁻¹ x_i]_w e_i`, so that
/// `mean(φ²)/n` is exactly the HC0 variance.
pub fn estimate_ancova_hc0(data: &TrialDataset, effect: EffectDefinition, alpha: f64) -> Result<EstimateResult> {
    super::check_alpha(alpha)?;
    if effect != EffectDefinition::DifferenceInMeans {
        return Err(Error::invalid("ANCOVA estimates a difference in means only"));
    }
    let n = data.len();
    let d = data.dim();
    if d + 2 >= n {
        return Err(Error::invalid(format!("ANCOVA needs d < n - 2 (d = {d}, n = {n})")));
    }
    let p = d + 2;
    let design = DMatrix::from_fn(n, p, |i, j| match j {
        0 => 1.0,
        1 => data.w()[i] as f64,
        _ => data.x().get(i, j - 2),
    });
    let y = DVector::from_column_slice(data.y());
    let xtx = design.tr_mul(&design);
    let (chol, _) = factor_with_ridge(&xtx).ok_or_else(|| Error::Singular("ANCOVA design is rank deficient".into()))?;
    let xtx_inv = chol.inverse();
    let beta = &xtx_inv * design.tr_mul(&y);
    let resid = &y - &design * &beta;
    // Row of (XᵀX)⁻¹ for the treatment coefficient.
    let w_row = xtx_inv.row(1).into_owned();
    let influence: Vec<f64> = (0..n)
        .map(|i| {
            let lever: f64 = (0..p).map(|j| w_row[j] * design[(i, j)]).sum();
            n as f64 * lever * resid[i]
        })
        .collect();

    // Standardized arm means: average prediction with w set to 0 and to 1.
    let base: f64 = (0..n)
        .map(|i| beta[0] + (0..d).map(|j| beta[j + 2] * design[(i, j + 2)]).sum::<f64>())
        .sum::<f64>()
        / n as f64;
    let tau_hat = beta[1];
    let n1 = data.arm_size(1);
    finish(
        Pieces {
            estimator: "ancova",
            effect,
            tau_hat,
            mu0_hat: base,
            mu1_hat: base + tau_hat,
            influence,
            n0: n - n1,
            n1,
            scale: super::outcome_scale(data.y()),
        },
        alpha,
    )
}
