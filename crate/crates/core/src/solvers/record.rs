//! Run records and the raw CSV format.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SolverConfig;
use crate::error::Result;
use crate::oracles::OracleKind;

/// Risks of the three estimates at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub iter: usize,
    /// Excess risk of θₙ.
    pub risk_last: f64,
    /// Excess risk of θ̄ₙ.
    pub risk_avg: f64,
    /// Excess risk of θ̃ₙ (accelerated runs only).
    pub risk_wavg: Option<f64>,
}

/// One trajectory with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub problem_id: String,
    pub problem_seed: u64,
    pub oracle: OracleKind,
    /// Seed of the gradient stream.
    pub seed: u64,
    pub d: usize,
    pub config: SolverConfig,
    pub rows: Vec<RunRow>,
}

impl RunRecord {
    /// Flattens to raw CSV rows.
    pub fn raw_rows(&self) -> Vec<RawRow> {
        self.rows
            .iter()
            .map(|r| RawRow {
                run_id: self.run_id.clone(),
                algorithm: self.config.algorithm.name().to_string(),
                oracle: self.oracle.name().to_string(),
                d: self.d,
                n: self.config.horizon,
                gamma: self.config.gamma,
                lambda: self.config.lambda,
                delta: self.config.delta,
                seed: self.seed,
                iter: r.iter,
                risk_last: Some(r.risk_last),
                risk_avg: Some(r.risk_avg),
                risk_wavg: r.risk_wavg,
            })
            .collect()
    }

    /// The risk the configured algorithm reports, per checkpoint.
    pub fn reported(&self) -> Vec<(usize, f64)> {
        self.rows.iter().map(|r| (r.iter, self.config.algorithm.reported(r))).collect()
    }
}

/// One line of the raw CSV file. Empty cells denote estimates not tracked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub run_id: String,
    pub algorithm: String,
    pub oracle: String,
    pub d: usize,
    pub n: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub seed: u64,
    pub iter: usize,
    pub risk_last: Option<f64>,
    pub risk_avg: Option<f64>,
    pub risk_wavg: Option<f64>,
}

/// Writes rows with a header.
pub fn write_raw_csv<W: Write>(rows: impl IntoIterator<Item = RawRow>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut any = false;
    for row in rows {
        w.serialize(row)?;
        any = true;
    }
    if !any {
        w.write_record(RAW_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

/// Column names of the raw CSV file.
pub const RAW_HEADER: [&str; 13] =
    ["run_id", "algorithm", "oracle", "d", "n", "gamma", "lambda", "delta", "seed", "iter", "risk_last", "risk_avg", "risk_wavg"];

/// Appends rows to a file, writing the header only when the file is new or empty.
pub fn append_raw_csv(path: impl AsRef<Path>, rows: impl IntoIterator<Item = RawRow>) -> Result<()> {
    let path = path.as_ref();
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    // With headers enabled the writer emits the header before the first record.
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    let mut any = false;
    for row in rows {
        w.serialize(row)?;
        any = true;
    }
    if fresh && !any {
        w.write_record(RAW_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads every row of a raw CSV file.
pub fn read_raw_csv(path: impl AsRef<Path>) -> Result<Vec<RawRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<RawRow>, _>>()?)
}
