use crate::error::{Error, Result};
use crate::learners::FeatureTable;

/// Observed trial data `(x_i, w_i, y_i)` plus the randomization probability.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    x: FeatureTable,
    w: Vec<u8>,
    y: Vec<f64>,
    design_pi1: f64,
}

impl TrialDataset {
    pub fn new(x: FeatureTable, w: Vec<u8>, y: Vec<f64>, design_pi1: f64) -> Result<Self> {
        let n = y.len();
        if x.n_rows() != n || w.len() != n {
            return Err(Error::invalid(format!(
                "trial columns disagree in length: x={}, w={}, y={n}",
                x.n_rows(),
                w.len()
            )));
        }
        if let Some(i) = w.iter().position(|&v| v > 1) {
            return Err(Error::invalid(format!("row {i}: treatment must be 0 or 1")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("row {i}: outcome must be finite")));
        }
        if !(design_pi1 > 0.0 && design_pi1 < 1.0) {
            return Err(Error::invalid(format!("design_pi1 must lie in (0,1), got {design_pi1}")));
        }
        let n1 = w.iter().filter(|&&v| v == 1).count();
        if n1 == 0 || n1 == n {
            return Err(Error::invalid(format!(
                "both arms need at least one subject (n0 = {}, n1 = {n1})",
                n - n1
            )));
        }
        Ok(TrialDataset { x, w, y, design_pi1 })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn x(&self) -> &FeatureTable {
        &self.x
    }

    pub fn w(&self) -> &[u8] {
        &self.w
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn design_pi1(&self) -> f64 {
        self.design_pi1
    }

    /// Design probability of arm `w`.
    pub fn design_pi(&self, arm: u8) -> f64 {
        if arm == 1 {
            self.design_pi1
        } else {
            1.0 - self.design_pi1
        }
    }

    pub fn arm_size(&self, arm: u8) -> usize {
        self.w.iter().filter(|&&v| v == arm).count()
    }

    pub fn dim(&self) -> usize {
        self.x.n_cols()
    }
}
