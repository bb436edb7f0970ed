//! Trial analysis: unadjusted, ANCOVA with HC0 errors, cross-fit AIPW and its
//! oracle variant. Every estimator reports influence values whose mean square
//! over `n` is its squared standard error.

mod aipw;
mod ancova;
mod data;
mod result;
mod unadjusted;

pub use aipw::{estimate_aipw, estimate_oracle_aipw, FnOracle, OracleMeans};
pub use ancova::estimate_ancova_hc0;
pub use data::TrialDataset;
pub use result::EstimateResult;
pub use unadjusted::estimate_unadjusted;

use crate::error::{Error, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

fn outcome_scale(y: &[f64]) -> f64 {
    y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
