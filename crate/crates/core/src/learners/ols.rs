//! Ordinary least squares with an intercept.

use super::linalg::solve_spd;
use super::{FeatureTable, FittedModel};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct OlsModel {
    intercept: f64,
    coef: Vec<f64>,
}

impl OlsModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }
}

impl FittedModel for OlsModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// Fits on centered data. Columns that are constant in the training data get
/// a zero coefficient; the remaining normal equations fall back to a small
/// ridge only when their Cholesky factorization fails.
pub fn fit_ols(x: &FeatureTable, y: &[f64]) -> Result<OlsModel> {
    let n = x.n_rows();
    let d = x.n_cols();
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let mut x_mean = vec![0.0; d];
    for row in x.rows() {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= nf);

    let active: Vec<usize> = (0..d).filter(|&j| x.rows().any(|r| r[j] != x_mean[j])).collect();
    let mut coef = vec![0.0; d];
    if !active.is_empty() {
        let p = active.len();
        let mut xtx = DMatrix::<f64>::zeros(p, p);
        let mut xty = DVector::<f64>::zeros(p);
        let mut centered = vec![0.0; p];
        for (i, row) in x.rows().enumerate() {
            for (c, &j) in centered.iter_mut().zip(&active) {
                *c = row[j] - x_mean[j];
            }
            let yc = y[i] - y_mean;
            for a in 0..p {
                xty[a] += centered[a] * yc;
                for b in 0..=a {
                    xtx[(a, b)] += centered[a] * centered[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtx[(b, a)] = xtx[(a, b)];
            }
        }
        let beta = solve_spd(&xtx, &xty)
            .ok_or_else(|| Error::Singular("OLS normal equations remain singular after ridge".into()))?;
        for (k, &j) in active.iter().enumerate() {
            coef[j] = beta[k];
        }
    }
    let intercept = y_mean - coef.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(OlsModel { intercept, coef })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.37 - 4.0).collect();
        let y: Vec<f64> = xs.iter().map(|v| 2.0 * v + 1.0).collect();
        let x = FeatureTable::new(50, 1, xs.clone()).unwrap();
        let m = fit_ols(&x, &y).unwrap();
        for (v, t) in xs.iter().zip(&y) {
            assert!((m.predict(&[*v]) - t).abs() < 1e-8);
        }
    }

    #[test]
    fn intercept_only_without_columns() {
        let x = FeatureTable::empty_columns(4);
        let m = fit_ols(&x, &[1.0, 2.0, 3.0, 6.0]).unwrap();
        assert_eq!(m.predict(&[]), 3.0);
    }

    #[test]
    fn zero_column_does_not_change_predictions() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos()]).collect();
        let y: Vec<f64> = rows.iter().enumerate().map(|(i, r)| r[0] - 2.0 * r[1] + (i as f64 * 1.7).sin()).collect();
        let x = FeatureTable::from_rows(&rows).unwrap();
        let x0 = x.with_column(&[0.0; 30]).unwrap();
        let a = fit_ols(&x, &y).unwrap();
        let b = fit_ols(&x0, &y).unwrap();
        for r in &rows {
            let mut r0 = r.clone();
            r0.push(0.0);
            assert_eq!(a.predict(r), b.predict(&r0));
        }
    }

    #[test]
    fn collinear_columns_use_ridge() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| 3.0 * i as f64 + 1.0).collect();
        let x = FeatureTable::from_rows(&rows).unwrap();
        let m = fit_ols(&x, &y).unwrap();
        for (r, t) in rows.iter().zip(&y) {
            assert!((m.predict(r) - t).abs() < 1e-4);
        }
    }
}
