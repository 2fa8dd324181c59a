//! Fitted against predicted rate exponents on source-condition problems.

use serde::{Deserialize, Serialize};

use super::{fit_rate, mean_stderr, RateFit};
use crate::analytic::rates::{rate_th5, rate_th6};
use crate::analytic::{exact_acc_risk_moment, exact_avsgd_risk};
use crate::error::{domain, Result};
use crate::oracles::OracleKind;
use crate::problems::{check_truncation, make_source_problem};
use crate::rng::derive_seed;
use crate::solvers::{default_params, run, Algorithm, Regime, RegimeInputs};

/// How the risk at each horizon is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMapMode {
    /// Exact expectation under the Gaussian additive oracle.
    Exact,
    /// Mean over seeded replications of the Gaussian additive oracle.
    MonteCarlo { replications: usize },
}

/// Settings of a rate map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateMapOptions {
    /// Seed of the source problem (and of the Monte Carlo streams).
    pub seed: u64,
    pub mode: RateMapMode,
    /// Truncation rule: discarded tail must stay below this fraction of the smallest risk.
    pub tail_fraction: f64,
}

impl Default for RateMapOptions {
    fn default() -> Self {
        Self { seed: 0, mode: RateMapMode::Exact, tail_fraction: 1e-3 }
    }
}

/// Fit for one (r, algorithm) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMapRow {
    pub r: f64,
    pub algorithm: Algorithm,
    pub regime: Regime,
    pub fit: RateFit,
    /// Exponent predicted for the prescribed tuning.
    pub predicted: f64,
    /// Optimal exponent −(1−r)/(b+1−r).
    pub optimal: f64,
    /// Whether the optimal rate is predicted for this algorithm.
    pub valid: bool,
    /// Risk of the final average at each horizon.
    pub risks: Vec<(usize, f64)>,
}

/// All rows of a rate map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMapTable {
    pub b: f64,
    pub d: usize,
    pub seed: u64,
    pub rows: Vec<RateMapRow>,
}

impl RateMapTable {
    pub fn row(&self, r: f64, algorithm: Algorithm) -> Option<&RateMapRow> {
        self.rows.iter().find(|row| row.r == r && row.algorithm == algorithm)
    }
}

/// For each r, runs averaged SGD tuned by the th5 prescription and averaged
/// accelerated SGD tuned by th6 at every horizon (a fresh run per horizon),
/// fits the exponent of the final-average risk and tabulates it against the
/// predictions.
pub fn rate_map(b: f64, rs: &[f64], d: usize, horizons: &[usize], opts: RateMapOptions) -> Result<RateMapTable> {
    if horizons.len() < super::MIN_FIT_POINTS {
        return domain(format!("need at least {} horizons", super::MIN_FIT_POINTS));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return domain("horizons must be strictly increasing");
    }
    let mut rows = Vec::new();
    for &r in rs {
        let (problem, _) = make_source_problem(d, b, r, opts.seed)?;
        let inputs = RegimeInputs { gamma: None, r: Some(r), b: Some(b) };
        let mut smallest = f64::INFINITY;
        let mut pending = Vec::new();
        for (alg, regime, pred) in [(Algorithm::AvGD, Regime::Th5, rate_th5(r, b)?), (Algorithm::AvAccGD, Regime::Th6, rate_th6(r, b)?)] {
            let mut risks = Vec::with_capacity(horizons.len());
            for &n in horizons {
                let cfg = default_params(&problem, alg, n, regime, inputs)?.config.with_checkpoints(vec![n]);
                let risk = match opts.mode {
                    RateMapMode::Exact => {
                        let res = if alg.is_accelerated() {
                            exact_acc_risk_moment(&problem, &cfg, &[n])?
                        } else {
                            exact_avsgd_risk(&problem, &cfg, &[n])?
                        };
                        res.rows[0].exact_risk
                    }
                    RateMapMode::MonteCarlo { replications } => {
                        let cell = format!("ratemap-{alg}-r{r}-n{n}");
                        let vals = (0..replications.max(1))
                            .map(|k| {
                                let rec = run(&problem, OracleKind::AdditiveGaussian, &cfg, derive_seed(opts.seed, &cell, k as u64))?;
                                Ok(rec.rows[0].risk_avg)
                            })
                            .collect::<Result<Vec<f64>>>()?;
                        mean_stderr(&vals).0
                    }
                };
                smallest = smallest.min(risk);
                risks.push((n, risk));
            }
            let fit = fit_rate(&risks, (horizons[0], *horizons.last().expect("non-empty")))?;
            pending.push(RateMapRow {
                r,
                algorithm: alg,
                regime,
                fit,
                predicted: pred.exponent,
                optimal: pred.optimal_exponent,
                valid: pred.valid,
                risks,
            });
        }
        check_truncation(b, r, d, smallest, opts.tail_fraction)?;
        rows.extend(pending);
    }
    Ok(RateMapTable { b, d, seed: opts.seed, rows })
}
