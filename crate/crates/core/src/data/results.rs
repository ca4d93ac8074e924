use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One benchmark output row. Aggregate rows carry `run_id = "mean"` and
/// averaged numeric fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub algo: String,
    pub n: usize,
    /// Collection size; absent for capacity-constrained runs.
    #[serde(rename = "N")]
    pub num_sets: Option<usize>,
    pub eps: f64,
    pub iterations: f64,
    pub wall_time_s: f64,
    pub revenue: f64,
    pub rel_error: Option<f64>,
    pub overlap: Option<f64>,
}

pub const RESULT_COLUMNS: [&str; 10] =
    ["run_id", "algo", "n", "N", "eps", "iterations", "wall_time_s", "revenue", "rel_error", "overlap"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown output format {other:?}"))),
        }
    }
}

/// Writes rows as CSV (header always present) or as a JSON array.
pub fn write_results_to<W: Write>(rows: &[ResultRow], w: W, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
            wtr.write_record(RESULT_COLUMNS)?;
            for row in rows {
                wtr.serialize(row)?;
            }
            wtr.flush()?;
        }
        OutputFormat::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write_results(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    write_results_to(rows, BufWriter::new(File::create(path)?), format)
}

pub fn read_results_json(path: &Path) -> Result<Vec<ResultRow>> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}
