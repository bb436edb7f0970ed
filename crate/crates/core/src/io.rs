//! CSV input and output for historical (`y0,x1,...`) and trial (`w,y,x1,...`)
//! files. Empty covariate cells are imputed with the column mean.

use crate::design::HistoricalDataset;
use crate::error::{Error, Result};
use crate::estimators::TrialDataset;
use crate::learners::FeatureTable;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedHistorical {
    pub data: HistoricalDataset,
    pub covariates: Vec<String>,
    pub imputed_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrial {
    pub data: TrialDataset,
    pub covariates: Vec<String>,
    pub imputed_cells: usize,
}

struct RawTable {
    lead: Vec<Vec<f64>>,
    covariates: Vec<String>,
    x: FeatureTable,
    imputed_cells: usize,
}

fn data_err(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("line {line}: {msg}"))
}

/// Reads a table whose first columns are the required `lead` fields and the
/// rest are covariates.
fn read_table<R: Read>(reader: R, lead: &[&str]) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| data_err(1, e))?.clone();
    if header.len() < lead.len() || header.iter().take(lead.len()).ne(lead.iter().copied()) {
        return Err(data_err(1, format!("header must start with {}", lead.join(","))));
    }
    let covariates: Vec<String> = header.iter().skip(lead.len()).map(str::to_string).collect();
    let d = covariates.len();
    let mut lead_cols: Vec<Vec<f64>> = vec![Vec::new(); lead.len()];
    let mut cells: Vec<Option<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            data_err(line, e)
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        for (j, name) in lead.iter().enumerate() {
            let cell = &rec[j];
            if cell.is_empty() {
                return Err(data_err(line, format!("missing value in column '{name}'")));
            }
            let v: f64 = cell.parse().map_err(|_| data_err(line, format!("cannot parse '{cell}' in column '{name}'")))?;
            if !v.is_finite() {
                return Err(data_err(line, format!("column '{name}' must be finite, got {cell}")));
            }
            lead_cols[j].push(v);
        }
        for (j, cell) in rec.iter().skip(lead.len()).enumerate() {
            if cell.is_empty() {
                cells.push(None);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| data_err(line, format!("cannot parse '{cell}' in column '{}'", covariates[j])))?;
            if !v.is_finite() {
                return Err(data_err(line, format!("column '{}' must be finite, got {cell}", covariates[j])));
            }
            cells.push(Some(v));
        }
    }
    let n = lead_cols[0].len();
    if n == 0 {
        return Err(Error::Data("file has a header but no rows".into()));
    }
    let mut means = vec![0.0; d];
    for (j, mean) in means.iter_mut().enumerate() {
        let observed: Vec<f64> = (0..n).filter_map(|i| cells[i * d + j]).collect();
        if observed.is_empty() {
            return Err(Error::Data(format!("covariate column '{}' has no observed values", covariates[j])));
        }
        *mean = observed.iter().sum::<f64>() / observed.len() as f64;
    }
    let imputed_cells = cells.iter().filter(|c| c.is_none()).count();
    let data: Vec<f64> = cells.iter().enumerate().map(|(k, c)| c.unwrap_or(means[k % d.max(1)])).collect();
    Ok(RawTable { lead: lead_cols, covariates, x: FeatureTable::new(n, d, data)?, imputed_cells })
}

pub fn read_historical<R: Read>(reader: R) -> Result<LoadedHistorical> {
    let mut t = read_table(reader, &["y0"])?;
    let y0 = t.lead.remove(0);
    Ok(LoadedHistorical { data: HistoricalDataset::new(t.x, y0)?, covariates: t.covariates, imputed_cells: t.imputed_cells })
}

/// `design_pi1` is the randomization probability of the trial.
pub fn read_trial<R: Read>(reader: R, design_pi1: f64) -> Result<LoadedTrial> {
    let t = read_table(reader, &["w", "y"])?;
    let mut w = Vec::with_capacity(t.lead[0].len());
    for (i, &v) in t.lead[0].iter().enumerate() {
        if v != 0.0 && v != 1.0 {
            return Err(data_err(i as u64 + 2, format!("treatment w must be 0 or 1, got {v}")));
        }
        w.push(v as u8);
    }
    let data = TrialDataset::new(t.x, w, t.lead[1].clone(), design_pi1)?;
    Ok(LoadedTrial { data, covariates: t.covariates, imputed_cells: t.imputed_cells })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn read_historical_path(path: &Path) -> Result<LoadedHistorical> {
    read_historical(open(path)?).map_err(|e| e.context(path.display()))
}

pub fn read_trial_path(path: &Path, design_pi1: f64) -> Result<LoadedTrial> {
    read_trial(open(path)?, design_pi1).map_err(|e| e.context(path.display()))
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Data(e.to_string())
}

fn covariate_header(d: usize) -> impl Iterator<Item = String> {
    (1..=d).map(|j| format!("x{j}"))
}

/// Values are written in shortest round-trip form, so reading the file back
/// reproduces every value bit for bit.
pub fn write_historical<W: Write>(data: &HistoricalDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("y0".to_string()).chain(covariate_header(data.x().n_cols())).collect();
    w.write_record(&header).map_err(io_err)?;
    for (i, row) in data.x().rows().enumerate() {
        let rec: Vec<String> = std::iter::once(data.y0()[i].to_string()).chain(row.iter().map(f64::to_string)).collect();
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_trial<W: Write>(data: &TrialDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> =
        ["w".to_string(), "y".to_string()].into_iter().chain(covariate_header(data.x().n_cols())).collect();
    w.write_record(&header).map_err(io_err)?;
    for (i, row) in data.x().rows().enumerate() {
        let rec: Vec<String> = [data.w()[i].to_string(), data.y()[i].to_string()]
            .into_iter()
            .chain(row.iter().map(f64::to_string))
            .collect();
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn historical_with_imputation() {
        let text = "y0,x1,x2\n1.5,1,\n2.5,3,4\n3,,6\n";
        let h = read_historical(text.as_bytes()).unwrap();
        assert_eq!(h.imputed_cells, 2);
        assert_eq!(h.covariates, ["x1", "x2"]);
        assert_eq!(h.data.x().row(0), &[1.0, 5.0]);
        assert_eq!(h.data.x().row(2), &[2.0, 6.0]);
        assert_eq!(h.data.y0(), &[1.5, 2.5, 3.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = read_historical("y0,x1\n1,2\nabc,3\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = read_historical("y0,x1\n1,2\n,3\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = read_historical("y0,x1\n1,2\nnan,3\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("finite"), "{err}");
        let err = read_historical("y0,x1\n1,2\n4,3,5\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(read_historical("y,x1\n1,2\n".as_bytes()).is_err());
        assert!(read_historical("y0,x1\n".as_bytes()).is_err());
    }

    #[test]
    fn trial_parsing() {
        let t = read_trial("w,y\n1,2\n1,4\n0,1\n0,3\n".as_bytes(), 0.5).unwrap();
        assert_eq!(t.data.w(), &[1, 1, 0, 0]);
        assert_eq!(t.data.dim(), 0);
        let err = read_trial("w,y\n2,1\n0,1\n".as_bytes(), 0.5).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(read_trial("w,y\n1,2\n1,3\n".as_bytes(), 0.5).is_err());
        assert!(read_trial("w,y\n1,\n0,3\n".as_bytes(), 0.5).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let x = FeatureTable::new(3, 2, vec![0.1, -1.0 / 3.0, 1e-300, 2.0f64.sqrt(), -0.0, 7.25]).unwrap();
        let data = TrialDataset::new(x, vec![1, 0, 1], vec![std::f64::consts::PI, -1e20, 0.3], 0.5).unwrap();
        let mut buf = Vec::new();
        write_trial(&data, &mut buf).unwrap();
        let back = read_trial(buf.as_slice(), 0.5).unwrap();
        assert_eq!(back.data, data);
        assert_eq!(back.imputed_cells, 0);

        let h = HistoricalDataset::new(data.x().clone(), data.y().to_vec()).unwrap();
        let mut buf = Vec::new();
        write_historical(&h, &mut buf).unwrap();
        assert_eq!(read_historical(buf.as_slice()).unwrap().data, h);
    }
}
