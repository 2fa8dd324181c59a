//! Monte Carlo summaries against exact expectations.

use serde::{Deserialize, Serialize};

use super::CellSummary;
use crate::analytic::AnalyticResult;
use crate::error::{Error, Result};

/// |z| above which a single checkpoint flags the comparison.
pub const Z_HARD: f64 = 4.0;
/// |z| counted towards the fraction rule.
pub const Z_SOFT: f64 = 2.0;
/// Largest tolerated fraction of checkpoints with |z| > `Z_SOFT`.
pub const SOFT_FRACTION: f64 = 0.10;

/// One compared checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub iter: usize,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub exact: f64,
    /// (mc_mean − exact)/stderr, 0 when both the gap and the stderr vanish.
    pub z: f64,
}

/// Outcome of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub max_abs_z: f64,
    /// Fraction of checkpoints with |z| > 2.
    pub frac_over_soft: f64,
    /// True when some |z| > 4 or more than 10% of checkpoints have |z| > 2.
    pub flagged: bool,
}

/// Per-checkpoint z-scores of a Monte Carlo summary against an exact result.
pub fn compare_mc_to_oracle(summary: &CellSummary, analytic: &AnalyticResult) -> Result<CompareReport> {
    if summary.rows.len() != analytic.rows.len() || summary.rows.iter().zip(&analytic.rows).any(|(s, a)| s.iter != a.n) {
        return Err(Error::CheckpointMismatch(format!(
            "summary {} has {} checkpoints, analytic result {}",
            summary.cell_id,
            summary.rows.len(),
            analytic.rows.len()
        )));
    }
    let rows: Vec<CompareRow> = summary
        .rows
        .iter()
        .zip(&analytic.rows)
        .map(|(s, a)| {
            let gap = s.mean_risk - a.exact_risk;
            let z = if s.stderr > 0.0 {
                gap / s.stderr
            } else if gap.abs() <= 1e-12 * a.exact_risk.abs().max(1e-300) || gap == 0.0 {
                0.0
            } else {
                gap.signum() * f64::INFINITY
            };
            CompareRow { iter: s.iter, mc_mean: s.mean_risk, mc_stderr: s.stderr, exact: a.exact_risk, z }
        })
        .collect();
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    let over = rows.iter().filter(|r| r.z.abs() > Z_SOFT).count();
    let frac_over_soft = if rows.is_empty() { 0.0 } else { over as f64 / rows.len() as f64 };
    Ok(CompareReport { flagged: max_abs_z > Z_HARD || frac_over_soft > SOFT_FRACTION, rows, max_abs_z, frac_over_soft })
}
