//! CSV formats shared by the CLI and external tools.
//!
//! - operator: first line `m,d`, then `m` lines of `d` comma-separated values
//! - data: header `y`, one observation per line
//! - draws: `iter,u_1..u_d,Delta,tau,nu,loglik`
//! - diagnostics: `parameter,ess,geweke_z,hw_p,hw_pass,halfwidth_pass`
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! file parses back to bit-identical values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diagnostics::ParameterDiagnostics;
use crate::error::{Error, Result};
use crate::forward::LinearForwardModel;
use crate::sampler::{param_names, ChainOutput};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn reader(path: &Path, headers: bool) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .flexible(!headers)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    field.parse().map_err(|_| {
        Error::Data(format!(
            "{}: line {line}: '{field}' is not a number",
            path.display()
        ))
    })
}

pub fn write_operator_csv(path: &Path, op: &LinearForwardModel) -> Result<()> {
    let mut w = create(path)?;
    let a = op.matrix();
    let io = |e| Error::io(path, e);
    writeln!(w, "{},{}", a.nrows(), a.ncols()).map_err(io)?;
    for row in a.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_operator_csv(path: &Path) -> Result<LinearForwardModel> {
    let mut rdr = reader(path, false)?;
    let mut records = rdr.records();
    let dims = records
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty operator file", path.display())))?
        .map_err(|e| Error::csv(path, e))?;
    if dims.len() != 2 {
        return Err(Error::Data(format!(
            "{}: first line must be 'm,d'",
            path.display()
        )));
    }
    let dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Data(format!("{}: bad dimension '{s}'", path.display())))
    };
    let (m, d) = (dim(&dims[0])?, dim(&dims[1])?);
    let mut values = Vec::with_capacity(m * d);
    let mut rows = 0;
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        if rec.len() != d {
            return Err(Error::Data(format!(
                "{}: line {} has {} values, expected {d}",
                path.display(),
                i + 2,
                rec.len()
            )));
        }
        for f in rec.iter() {
            values.push(parse_f64(f, path, i + 2)?);
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::Data(format!(
            "{}: header declares {m} rows, found {rows}",
            path.display()
        )));
    }
    LinearForwardModel::new(DMatrix::from_row_slice(m, d, &values))
}

pub fn write_data_csv(path: &Path, y: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "y").map_err(io)?;
    for v in y {
        writeln!(w, "{v}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_data_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = reader(path, true)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?;
    if headers.len() != 1 || &headers[0] != "y" {
        return Err(Error::Data(format!(
            "{}: data file must have the single header 'y'",
            path.display()
        )));
    }
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            parse_f64(&rec[0], path, i + 2)
        })
        .collect()
}

/// Parsed draw file.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawTable {
    pub iterations: Vec<usize>,
    pub names: Vec<String>,
    pub draws: DMatrix<f64>,
    pub loglik: Vec<f64>,
}

impl From<&ChainOutput> for DrawTable {
    fn from(c: &ChainOutput) -> Self {
        DrawTable {
            iterations: c.iterations.clone(),
            names: c.param_names(),
            draws: c.draws.clone(),
            loglik: c.loglik_totals(),
        }
    }
}

pub fn write_draws_csv(path: &Path, chain: &ChainOutput) -> Result<()> {
    let table = DrawTable::from(chain);
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    let mut header = vec!["iter".to_string()];
    header.extend(table.names.iter().cloned());
    header.push("loglik".into());
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for (r, row) in table.draws.row_iter().enumerate() {
        let mut line = table.iterations[r].to_string();
        for v in row.iter() {
            line.push(',');
            line.push_str(&v.to_string());
        }
        line.push(',');
        line.push_str(&table.loglik[r].to_string());
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_draws_csv(path: &Path) -> Result<DrawTable> {
    let mut rdr = reader(path, true)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let cols = headers.len();
    if cols < 6 || &headers[0] != "iter" || &headers[cols - 1] != "loglik" {
        return Err(Error::Data(format!(
            "{}: draw file must have columns iter,u_1..u_d,Delta,tau,nu,loglik",
            path.display()
        )));
    }
    let names: Vec<String> = headers.iter().skip(1).take(cols - 2).map(str::to_string).collect();
    if names != param_names(cols - 5) {
        return Err(Error::Data(format!("{}: unexpected draw columns", path.display())));
    }
    let mut iterations = Vec::new();
    let mut values = Vec::new();
    let mut loglik = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        iterations.push(
            rec[0]
                .parse()
                .map_err(|_| Error::Data(format!("{}: bad iteration '{}'", path.display(), &rec[0])))?,
        );
        for f in rec.iter().skip(1).take(cols - 2) {
            values.push(parse_f64(f, path, i + 2)?);
        }
        loglik.push(parse_f64(&rec[cols - 1], path, i + 2)?);
    }
    let rows = iterations.len();
    Ok(DrawTable {
        iterations,
        names,
        draws: DMatrix::from_row_slice(rows, cols - 2, &values),
        loglik,
    })
}

/// Posterior summary of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    #[serde(rename = "q2.5")]
    pub q2_5: f64,
    pub q50: f64,
    #[serde(rename = "q97.5")]
    pub q97_5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub parameter: String,
    pub ess: f64,
    pub geweke_z: f64,
    pub hw_p: f64,
    pub hw_pass: bool,
    pub halfwidth_pass: bool,
}

impl From<&ParameterDiagnostics> for DiagnosticsRow {
    fn from(p: &ParameterDiagnostics) -> Self {
        DiagnosticsRow {
            parameter: p.name.clone(),
            ess: p.ess,
            geweke_z: p.geweke_z,
            hw_p: p.hw_p,
            hw_pass: p.hw_stationary,
            halfwidth_pass: p.hw_halfwidth_ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub model: String,
    pub lppd: f64,
    pub p_waic: f64,
    pub waic: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub nu_mode: String,
    pub nu_mean: f64,
    pub delta_mean: f64,
    pub delta_sd: f64,
    pub tau_mean: f64,
    pub tau_sd: f64,
    /// `||u_hat - u_true||_2`; empty when the truth is unknown.
    pub recon_error: Option<f64>,
    /// Monte Carlo standard error of `recon_error`.
    pub recon_error_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub parameter: String,
    pub value: f64,
}

/// Writes serde rows with a header line.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = reader(path, true)?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| Error::csv(path, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::cauchy_laplace_operator;

    #[test]
    fn operator_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("op.csv");
        let op = cauchy_laplace_operator(6).unwrap();
        write_operator_csv(&path, &op).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("6,6\n"));
        assert_eq!(read_operator_csv(&path).unwrap(), op);
    }

    #[test]
    fn operator_rejects_bad_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("op.csv");
        std::fs::write(&path, "2,2\n1,2\n3\n").unwrap();
        assert!(matches!(read_operator_csv(&path), Err(Error::Data(_))));
        std::fs::write(&path, "3,2\n1,2\n3,4\n").unwrap();
        assert!(matches!(read_operator_csv(&path), Err(Error::Data(_))));
        std::fs::write(&path, "2,2\n1,x\n3,4\n").unwrap();
        assert!(matches!(read_operator_csv(&path), Err(Error::Data(_))));
    }

    #[test]
    fn data_round_trip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.csv");
        let y = vec![0.1, -2.5e-17, 3.0, 1.0 / 3.0];
        write_data_csv(&path, &y).unwrap();
        assert_eq!(read_data_csv(&path).unwrap(), y);
        std::fs::write(&path, "obs\n1.0\n").unwrap();
        assert!(matches!(read_data_csv(&path), Err(Error::Data(_))));
    }

    #[test]
    fn missing_file_is_csv_error_with_path() {
        let err = read_data_csv(Path::new("/nonexistent/y.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/y.csv"));
    }
}
