//! Regression learners for conditional means, and cross-validated error.
//!
//! Every learner is implemented here from scratch: ordinary least squares,
//! uniform kNN, least-squares gradient boosting, and an ensemble that picks
//! one member by cross-validated MSE.

mod gbm;
mod knn;
pub(crate) mod linalg;
mod ols;
mod table;

pub use gbm::{fit_gbm, GbmModel, GbmParams};
pub use knn::{fit_knn, KnnModel};
pub use ols::{fit_ols, OlsModel};
pub use table::FeatureTable;

use crate::error::{Error, Result};
use crate::rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A trained conditional-mean model. Immutable once built.
pub trait FittedModel: Send + Sync + fmt::Debug {
    fn predict(&self, x: &[f64]) -> f64;

    fn predict_rows(&self, x: &FeatureTable, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.predict(x.row(i))).collect()
    }
}

/// Anything that can be trained on `(X, y)`.
pub trait Learner: Sync {
    fn fit(&self, x: &FeatureTable, y: &[f64], seed: u64) -> Result<Box<dyn FittedModel>>;
}

/// Declarative learner configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    Ols,
    Knn { k: usize },
    Gbm(GbmParams),
    /// Fits every member, keeps the one with the lowest
    /// `selection_folds`-fold CV MSE (ties: first listed), refit on all rows.
    Ensemble { members: Vec<LearnerSpec>, selection_folds: usize },
    /// Predicts 0 everywhere. Testing hook that makes AIPW reduce to IPW.
    Null,
}

impl LearnerSpec {
    /// OLS, 5-NN and GBM(50 trees, depth 5) selected by 5-fold CV.
    pub fn default_ensemble() -> Self {
        LearnerSpec::Ensemble {
            members: vec![LearnerSpec::Ols, LearnerSpec::Knn { k: 5 }, LearnerSpec::Gbm(GbmParams::default())],
            selection_folds: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::Ols | LearnerSpec::Null => Ok(()),
            LearnerSpec::Knn { k } => {
                if *k == 0 {
                    Err(Error::invalid("kNN requires k >= 1"))
                } else {
                    Ok(())
                }
            }
            LearnerSpec::Gbm(p) => {
                if p.n_trees == 0 || p.max_depth == 0 || p.min_samples_leaf == 0 {
                    return Err(Error::invalid("GBM requires n_trees, max_depth and min_samples_leaf >= 1"));
                }
                if !(p.learning_rate > 0.0) || !p.learning_rate.is_finite() {
                    return Err(Error::invalid("GBM learning rate must be positive"));
                }
                Ok(())
            }
            LearnerSpec::Ensemble { members, selection_folds } => {
                if members.is_empty() {
                    return Err(Error::invalid("ensemble needs at least one member"));
                }
                if *selection_folds < 2 {
                    return Err(Error::invalid("ensemble selection needs at least 2 folds"));
                }
                members.iter().try_for_each(LearnerSpec::validate)
            }
        }
    }

    /// Short label used in reports and CSV output.
    pub fn label(&self) -> String {
        match self {
            LearnerSpec::Ols => "ols".into(),
            LearnerSpec::Knn { k } => format!("knn:{k}"),
            LearnerSpec::Gbm(_) => "gbm".into(),
            LearnerSpec::Ensemble { .. } => "ensemble".into(),
            LearnerSpec::Null => "null".into(),
        }
    }

    /// For an ensemble: CV MSE of every member on `(x, y)` and the index of
    /// the selected one.
    pub fn select_member(&self, x: &FeatureTable, y: &[f64], seed: u64) -> Result<(usize, Vec<f64>)> {
        let LearnerSpec::Ensemble { members, selection_folds } = self else {
            return Err(Error::invalid("select_member called on a non-ensemble learner"));
        };
        let n = y.len();
        if members.len() == 1 || n < 2 {
            return Ok((0, vec![f64::NAN; members.len()]));
        }
        // Small training splits use as many folds as they have rows.
        let folds = (*selection_folds).min(n);
        let scores = members
            .iter()
            .map(|m| cv_mse(m, x, y, folds, seed))
            .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (j, &s) in scores.iter().enumerate() {
            if s < scores[best] {
                best = j;
            }
        }
        Ok((best, scores))
    }
}

impl Default for LearnerSpec {
    fn default() -> Self {
        Self::default_ensemble()
    }
}

#[derive(Debug, Clone, Copy)]
struct ZeroModel;

impl FittedModel for ZeroModel {
    fn predict(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

fn check_training_data(x: &FeatureTable, y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::invalid("cannot fit a learner on empty data"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::invalid(format!("{} covariate rows but {} responses", x.n_rows(), y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("responses must be finite"));
    }
    Ok(())
}

impl Learner for LearnerSpec {
    fn fit(&self, x: &FeatureTable, y: &[f64], seed: u64) -> Result<Box<dyn FittedModel>> {
        self.validate()?;
        check_training_data(x, y)?;
        Ok(match self {
            LearnerSpec::Ols => Box::new(fit_ols(x, y)?),
            LearnerSpec::Knn { k } => Box::new(fit_knn(x, y, *k)),
            LearnerSpec::Gbm(p) => Box::new(fit_gbm(x, y, p)),
            LearnerSpec::Null => Box::new(ZeroModel),
            LearnerSpec::Ensemble { members, .. } => {
                let (best, _) = self.select_member(x, y, rng::derive(seed, SELECTION_STREAM))?;
                members[best].fit(x, y, seed)?
            }
        })
    }
}

const SELECTION_STREAM: u64 = 0x5e1ec7;
const FOLD_STREAM: u64 = 0xf01d;

/// Convenience wrapper for [`Learner::fit`].
pub fn fit(spec: &LearnerSpec, x: &FeatureTable, y: &[f64], seed: u64) -> Result<Box<dyn FittedModel>> {
    spec.fit(x, y, seed)
}

/// Mean squared held-out error over a seeded `folds`-way partition.
///
/// Each training split is fit with the learner as given, so an ensemble runs
/// its own (nested) selection inside every outer training split.
pub fn cv_mse(learner: &dyn Learner, x: &FeatureTable, y: &[f64], folds: usize, seed: u64) -> Result<f64> {
    check_training_data(x, y)?;
    let n = y.len();
    if folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if folds > n {
        return Err(Error::invalid(format!("{folds} folds requested for only {n} rows")));
    }
    let labels = rng::fold_labels(n, folds, rng::derive(seed, FOLD_STREAM));
    let mut sse = 0.0;
    for k in 0..folds {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| labels[i] == k);
        let xt = x.select_rows(&train);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let model = learner.fit(&xt, &yt, rng::derive(seed, k as u64))?;
        for i in test {
            let e = model.predict(x.row(i)) - y[i];
            sse += e * e;
        }
    }
    Ok(sse / n as f64)
}

/// `√cv_mse`.
pub fn cv_rmse(learner: &dyn Learner, x: &FeatureTable, y: &[f64], folds: usize, seed: u64) -> Result<f64> {
    cv_mse(learner, x, y, folds, seed).map(f64::sqrt)
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    /// `ensemble`, `ols`, `knn` / `knn:<k>`, `gbm` /
    /// `gbm:<trees>:<depth>[:<learning rate>[:<min leaf>]]`, `null`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let bad = || Error::invalid(format!("cannot parse learner '{s}'"));
        let spec = match (head, rest.as_slice()) {
            ("ensemble", []) => LearnerSpec::default_ensemble(),
            ("ols" | "lr", []) => LearnerSpec::Ols,
            ("null", []) => LearnerSpec::Null,
            ("knn", []) => LearnerSpec::Knn { k: 5 },
            ("knn", [k]) => LearnerSpec::Knn { k: k.parse().map_err(|_| bad())? },
            ("gbm", []) => LearnerSpec::Gbm(GbmParams::default()),
            ("gbm", args) if (2..=4).contains(&args.len()) => {
                let mut p = GbmParams::default();
                p.n_trees = args[0].parse().map_err(|_| bad())?;
                p.max_depth = args[1].parse().map_err(|_| bad())?;
                if let Some(lr) = args.get(2) {
                    p.learning_rate = lr.parse().map_err(|_| bad())?;
                }
                if let Some(leaf) = args.get(3) {
                    p.min_samples_leaf = leaf.parse().map_err(|_| bad())?;
                }
                LearnerSpec::Gbm(p)
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn noiseless_linear(n: usize) -> (FeatureTable, Vec<f64>) {
        let mut r = rng::seeded(10);
        let data: Vec<f64> = (0..n * 2).map(|_| r.random_range(-1.0..1.0)).collect();
        let x = FeatureTable::new(n, 2, data).unwrap();
        let y = x.rows().map(|row| 1.5 * row[0] - 0.5 * row[1] + 2.0).collect();
        (x, y)
    }

    #[test]
    fn parse_specs() {
        assert_eq!("ols".parse::<LearnerSpec>().unwrap(), LearnerSpec::Ols);
        assert_eq!("knn:7".parse::<LearnerSpec>().unwrap(), LearnerSpec::Knn { k: 7 });
        assert_eq!("ensemble".parse::<LearnerSpec>().unwrap(), LearnerSpec::default_ensemble());
        let LearnerSpec::Gbm(p) = "gbm:20:3:0.2".parse::<LearnerSpec>().unwrap() else { panic!() };
        assert_eq!((p.n_trees, p.max_depth, p.learning_rate), (20, 3, 0.2));
        assert!("knn:0".parse::<LearnerSpec>().is_err());
        assert!("forest".parse::<LearnerSpec>().is_err());
    }

    #[test]
    fn fit_rejects_bad_data() {
        let x = FeatureTable::empty_columns(0);
        assert!(fit(&LearnerSpec::Ols, &x, &[], 0).is_err());
        let x = FeatureTable::empty_columns(2);
        assert!(fit(&LearnerSpec::Ols, &x, &[1.0, f64::NAN], 0).is_err());
        assert!(FeatureTable::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn ols_cv_on_noiseless_data() {
        let (x, y) = noiseless_linear(100);
        let mse = cv_mse(&LearnerSpec::Ols, &x, &y, 5, 3).unwrap();
        assert!(mse <= 1e-10, "{mse}");
        let rmse = cv_rmse(&LearnerSpec::Ols, &x, &y, 5, 3).unwrap();
        assert!(rmse <= 1e-5);
    }

    #[test]
    fn cv_rejects_too_many_folds() {
        let (x, y) = noiseless_linear(4);
        assert!(cv_mse(&LearnerSpec::Ols, &x, &y, 5, 0).is_err());
        assert!(cv_mse(&LearnerSpec::Ols, &x, &y, 1, 0).is_err());
    }

    #[test]
    fn single_member_ensemble_matches_member() {
        let mut r = rng::seeded(4);
        let (x, _) = noiseless_linear(60);
        let y: Vec<f64> = x.rows().map(|row| row[0] * row[1] + r.sample::<f64, _>(StandardNormal)).collect();
        let ens = LearnerSpec::Ensemble { members: vec![LearnerSpec::Ols], selection_folds: 5 };
        let a = cv_mse(&ens, &x, &y, 5, 17).unwrap();
        let b = cv_mse(&LearnerSpec::Ols, &x, &y, 5, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ensemble_selects_argmin() {
        let mut r = rng::seeded(5);
        let (x, _) = noiseless_linear(150);
        let y: Vec<f64> = x.rows().map(|row| (3.0 * row[0]).sin() * 2.0 + 0.1 * r.sample::<f64, _>(StandardNormal)).collect();
        let ens = LearnerSpec::default_ensemble();
        let (best, scores) = ens.select_member(&x, &y, 9).unwrap();
        assert!(scores.iter().all(|&s| scores[best] <= s));
        assert_ne!(best, 0, "a nonlinear signal should not select OLS: {scores:?}");
    }

    #[test]
    fn fits_are_deterministic() {
        let mut r = rng::seeded(6);
        let (x, _) = noiseless_linear(80);
        let y: Vec<f64> = x.rows().map(|row| row[0].abs() + r.sample::<f64, _>(StandardNormal)).collect();
        let spec = LearnerSpec::default_ensemble();
        let a = fit(&spec, &x, &y, 21).unwrap();
        let b = fit(&spec, &x, &y, 21).unwrap();
        for row in x.rows() {
            assert_eq!(a.predict(row).to_bits(), b.predict(row).to_bits());
        }
    }

    #[test]
    fn knn_prediction_is_within_response_range() {
        let mut r = rng::seeded(7);
        let (x, _) = noiseless_linear(50);
        let y: Vec<f64> = (0..50).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let m = fit(&LearnerSpec::Knn { k: 4 }, &x, &y, 0).unwrap();
        for _ in 0..200 {
            let q = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
            let p = m.predict(&q);
            assert!(p >= lo && p <= hi);
        }
    }
}
