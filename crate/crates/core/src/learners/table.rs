use crate::error::{Error, Result};

/// Dense row-major `n × d` table of finite covariates. `d = 0` is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl FeatureTable {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::invalid(format!(
                "feature table shape {n_rows}x{n_cols} does not match {} values",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite covariate at row {}, column {}",
                pos / n_cols.max(1),
                pos % n_cols.max(1)
            )));
        }
        Ok(FeatureTable { n_rows, n_cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::invalid(format!("row {i} has {} covariates, expected {d}", rows[i].len())));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    /// `n` rows without covariates.
    pub fn empty_columns(n_rows: usize) -> Self {
        FeatureTable { n_rows, n_cols: 0, data: Vec::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// New table holding the given rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureTable {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        FeatureTable { n_rows: idx.len(), n_cols: self.n_cols, data }
    }

    /// Appends a column (used by tests and the ANCOVA design).
    pub fn with_column(&self, col: &[f64]) -> Result<FeatureTable> {
        if col.len() != self.n_rows {
            return Err(Error::invalid("column length does not match row count"));
        }
        let d = self.n_cols + 1;
        let mut data = Vec::with_capacity(self.n_rows * d);
        for (i, &c) in col.iter().enumerate() {
            data.extend_from_slice(self.row(i));
            data.push(c);
        }
        FeatureTable::new(self.n_rows, d, data)
    }
}
