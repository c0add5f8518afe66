//! Per-step diagnostic records and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const CSV_COLUMNS: [&str; 11] =
    ["k", "a_k", "x_norm", "margin", "f_inst", "grad_inst_norm", "F_est", "F_se", "gradF_norm_est", "S_k", "z_k"];

/// One row of the trajectory. The margin is `NaN` when no bound applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub k: u64,
    pub a_k: f64,
    pub x_norm: f64,
    pub margin: f64,
    pub f_inst: f64,
    pub grad_inst_norm: f64,
    #[serde(rename = "F_est")]
    pub f_est: f64,
    #[serde(rename = "F_se")]
    pub f_se: f64,
    #[serde(rename = "gradF_norm_est")]
    pub grad_f_norm_est: f64,
    #[serde(rename = "S_k")]
    pub s_k: f64,
    pub z_k: f64,
}

/// Quantities tracked at every step, not only on recorded rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: u64,
    pub max_x_norm: f64,
    /// `None` without a bound.
    pub min_margin: Option<f64>,
    /// `max ‖x_{k+1} − x_k‖ / a_k` over steps that started inside `B_{R₁}`.
    pub max_step_ratio: f64,
    pub diverged_at: Option<u64>,
    pub final_x_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub rows: Vec<DiagnosticRow>,
    pub summary: RunSummary,
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("malformed diagnostics csv: {0}")]
    MalformedCsv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CsvError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CsvError::Io(io),
            other => CsvError::MalformedCsv(format!("{other:?}")),
        }
    }
}

impl Diagnostics {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CsvError> {
        write_rows(&self.rows, out)
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), CsvError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Always writes the header, so an empty trajectory is still a valid file.
pub fn write_rows<W: Write>(rows: &[DiagnosticRow], out: W) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<DiagnosticRow>, CsvError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(CsvError::MalformedCsv(format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

pub fn load_rows(path: &Path) -> Result<Vec<DiagnosticRow>, CsvError> {
    read_rows(std::io::BufReader::new(std::fs::File::open(path)?))
}
