//! Symmetric positive-definite solves with a deterministic ridge fallback.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Relative pivot size below which a Cholesky factor is treated as singular.
const PIVOT_TOL: f64 = 1e-12;

fn factor(a: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let chol = a.clone().cholesky()?;
    let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    (min_pivot > PIVOT_TOL * scale.max(f64::MIN_POSITIVE)).then_some(chol)
}

/// Factors `a`, retrying once with `1e-8 · trace(a)/dim` added to the
/// diagonal. Returns the factor and whether the ridge was needed.
pub(crate) fn factor_with_ridge(a: &DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, bool)> {
    if let Some(c) = factor(a) {
        return Some((c, false));
    }
    let dim = a.nrows();
    if dim == 0 {
        return None;
    }
    let ridge = 1e-8 * a.trace() / dim as f64;
    if !(ridge > 0.0) {
        return None;
    }
    let mut reg = a.clone();
    for i in 0..dim {
        reg[(i, i)] += ridge;
    }
    factor(&reg).map(|c| (c, true))
}

pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    factor_with_ridge(a).map(|(c, _)| c.solve(b))
}
