//! Experiment orchestration: replication sweeps, summaries, rate fits,
//! Monte Carlo versus exact comparisons, rate maps and the Figure 1 setup.

mod compare;
pub mod fig1;
mod fit;
mod rate_map;

pub use compare::{compare_mc_to_oracle, CompareReport, CompareRow};
pub use fit::{default_window, fit_rate, RateFit, MIN_FIT_POINTS};
pub use rate_map::{rate_map, RateMapMode, RateMapOptions, RateMapRow, RateMapTable};

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::oracles::OracleKind;
use crate::problems::{make_fig1_problem, make_random_problem, make_source_problem, SpectralProblem};
use crate::rng::derive_seed;
use crate::solvers::{
    default_params, log_checkpoints, run, write_raw_csv, Algorithm, MomentumSchedule, Regime, RegimeInputs, RunRecord, SolverConfig,
    DEFAULT_POINTS_PER_DECADE,
};

/// Where the problem of an experiment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSource {
    /// A problem JSON document on disk.
    File { path: PathBuf },
    /// The Figure 1 generator.
    Fig1 { d: usize, seed: u64 },
    /// The source-condition generator.
    Source { d: usize, b: f64, r: f64, seed: u64 },
    /// The random test-problem generator.
    Random { d: usize, seed: u64 },
    /// A problem given in full.
    Inline { problem: Box<SpectralProblem> },
}

impl ProblemSource {
    /// Materializes the problem; `seed_override` replaces the generator seed.
    pub fn load(&self, seed_override: Option<u64>) -> Result<SpectralProblem> {
        match self {
            Self::File { path } => SpectralProblem::read_json(path),
            Self::Fig1 { d, seed } => make_fig1_problem(*d, seed_override.unwrap_or(*seed)),
            Self::Source { d, b, r, seed } => Ok(make_source_problem(*d, *b, *r, seed_override.unwrap_or(*seed))?.0),
            Self::Random { d, seed } => make_random_problem(*d, seed_override.unwrap_or(*seed)),
            Self::Inline { problem } => Ok((**problem).clone()),
        }
    }

    fn is_generated(&self) -> bool {
        matches!(self, Self::Fig1 { .. } | Self::Source { .. } | Self::Random { .. })
    }
}

/// Modifications applied to the loaded problem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemOverrides {
    pub sigma2: Option<f64>,
    pub tau2: Option<f64>,
    /// Rescales θ₀ − θ* (0 starts at the optimum).
    pub displacement_scale: Option<f64>,
    /// Applies a seeded random rotation.
    pub rotation_seed: Option<u64>,
}

impl ProblemOverrides {
    pub fn apply(&self, mut p: SpectralProblem) -> Result<SpectralProblem> {
        if self.sigma2.is_some() || self.tau2.is_some() {
            let (s, t) = (self.sigma2.unwrap_or(p.sigma2), self.tau2.unwrap_or(p.tau2));
            p = p.with_noise(s, t)?;
        }
        if let Some(f) = self.displacement_scale {
            p = p.with_displacement_scale(f);
        }
        if let Some(seed) = self.rotation_seed {
            p = p.with_rotation(seed);
        }
        Ok(p)
    }
}

/// Checkpoint grid of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointGrid {
    /// Logarithmic grid with this many points per decade.
    Log { per_decade: usize },
    /// Explicit iterations.
    Explicit { iters: Vec<usize> },
}

impl Default for CheckpointGrid {
    fn default() -> Self {
        Self::Log { per_decade: DEFAULT_POINTS_PER_DECADE }
    }
}

impl CheckpointGrid {
    pub fn resolve(&self, horizon: usize) -> Vec<usize> {
        match self {
            Self::Log { per_decade } => log_checkpoints(horizon, *per_decade),
            Self::Explicit { iters } => iters.iter().copied().filter(|&i| i <= horizon).collect(),
        }
    }
}

/// One (algorithm, oracle, parameters) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    /// Identifier used for seeding and output; defaults to "<algorithm>-<oracle>[-<regime>]".
    #[serde(default)]
    pub id: Option<String>,
    pub algorithm: Algorithm,
    pub oracle: OracleKind,
    pub horizon: usize,
    /// Parameter prescription; explicit `gamma`/`lambda`/`delta` are used when absent.
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub momentum: MomentumSchedule,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub allow_invalid: bool,
}

impl CellSpec {
    /// A cell with explicit parameters.
    pub fn explicit(algorithm: Algorithm, oracle: OracleKind, horizon: usize, gamma: f64, lambda: f64, delta: f64) -> Self {
        Self {
            id: None,
            algorithm,
            oracle,
            horizon,
            regime: None,
            gamma: Some(gamma),
            lambda: Some(lambda),
            delta: Some(delta),
            momentum: MomentumSchedule::Constant,
            r: None,
            b: None,
            allow_invalid: false,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn cell_id(&self) -> String {
        self.id.clone().unwrap_or_else(|| match self.regime {
            Some(r) => format!("{}-{}-{}", self.algorithm, self.oracle, r),
            None => format!("{}-{}", self.algorithm, self.oracle),
        })
    }

    /// Resolves the solver configuration on a problem.
    pub fn config(&self, problem: &SpectralProblem, grid: &CheckpointGrid) -> Result<SolverConfig> {
        let mut cfg = match self.regime {
            Some(regime) => {
                default_params(problem, self.algorithm, self.horizon, regime, RegimeInputs { gamma: self.gamma, r: self.r, b: self.b })?
                    .config
            }
            None => {
                let gamma = self.gamma.ok_or_else(|| Error::Config(format!("cell {} needs gamma or a regime", self.cell_id())))?;
                let default_delta = if self.algorithm.is_accelerated() { 1.0 } else { 0.0 };
                SolverConfig::new(self.algorithm, gamma, self.lambda.unwrap_or(0.0), self.delta.unwrap_or(default_delta), self.horizon)
            }
        };
        cfg.momentum = self.momentum;
        cfg.checkpoints = grid.resolve(self.horizon);
        cfg.allow_invalid = self.allow_invalid;
        cfg.validate(problem, self.oracle)?;
        Ok(cfg)
    }
}

/// A full experiment description, readable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub problem: ProblemSource,
    #[serde(default)]
    pub overrides: ProblemOverrides,
    pub cells: Vec<CellSpec>,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub checkpoints: CheckpointGrid,
    /// Draw a new generated problem for every replication (shared by all cells).
    #[serde(default)]
    pub fresh_problem_per_replication: bool,
    /// Directory receiving raw.csv, summary.csv and plot files.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Problem used by replication `rep`.
    pub fn problem_for(&self, rep: usize) -> Result<SpectralProblem> {
        let seed =
            (self.fresh_problem_per_replication && self.problem.is_generated()).then(|| derive_seed(self.base_seed, "problem", rep as u64));
        self.overrides.apply(self.problem.load(seed)?)
    }
}

/// Per-checkpoint statistics of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub iter: usize,
    pub mean_risk: f64,
    pub stderr: f64,
    pub n_reps: usize,
}

/// Summary of the reported risk of one cell across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell_id: String,
    pub algorithm: Algorithm,
    pub rows: Vec<SummaryRow>,
}

impl CellSummary {
    /// Aggregates records of one cell. Records must share checkpoints.
    pub fn from_records(cell_id: &str, algorithm: Algorithm, records: &[&RunRecord]) -> Result<Self> {
        let Some(first) = records.first() else {
            return Ok(Self { cell_id: cell_id.to_string(), algorithm, rows: Vec::new() });
        };
        let iters: Vec<usize> = first.rows.iter().map(|r| r.iter).collect();
        let mut rows = Vec::with_capacity(iters.len());
        for (k, &iter) in iters.iter().enumerate() {
            let vals: Vec<f64> = records
                .iter()
                .map(|rec| {
                    rec.rows
                        .get(k)
                        .filter(|r| r.iter == iter)
                        .map(|r| algorithm.reported(r))
                        .ok_or_else(|| Error::CheckpointMismatch(format!("run {} lacks checkpoint {iter}", rec.run_id)))
                })
                .collect::<Result<_>>()?;
            let (mean, se) = mean_stderr(&vals);
            rows.push(SummaryRow { iter, mean_risk: mean, stderr: se, n_reps: vals.len() });
        }
        Ok(Self { cell_id: cell_id.to_string(), algorithm, rows })
    }

    /// (iter, mean risk) pairs for rate fitting.
    pub fn curve(&self) -> Vec<(usize, f64)> {
        self.rows.iter().map(|r| (r.iter, r.mean_risk)).collect()
    }

    pub fn last(&self) -> Option<&SummaryRow> {
        self.rows.last()
    }
}

/// Sample mean and standard error of the mean (0 for a single value).
pub fn mean_stderr(vals: &[f64]) -> (f64, f64) {
    let k = vals.len() as f64;
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = crate::linalg::sum(vals.iter().copied()) / k;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = crate::linalg::sum(vals.iter().map(|v| (v - mean) * (v - mean))) / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// A replication that aborted on a numeric blow-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub cell_id: String,
    pub replication: usize,
    pub seed: u64,
    pub message: String,
}

/// Everything an experiment produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    /// Records ordered by (cell, replication).
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub summaries: Vec<CellSummary>,
}

impl ExperimentResult {
    pub fn summary(&self, cell_id: &str) -> Option<&CellSummary> {
        self.summaries.iter().find(|s| s.cell_id == cell_id)
    }

    /// Writes raw.csv, summary.csv and one plot file per cell into `dir`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_raw_csv(self.records.iter().flat_map(|r| r.raw_rows()), std::fs::File::create(dir.join("raw.csv"))?)?;
        write_summary_csv(&self.summaries, std::fs::File::create(dir.join("summary.csv"))?)?;
        for s in &self.summaries {
            write_plot_data(&s.curve(), std::fs::File::create(dir.join(format!("plot_{}.dat", sanitize(&s.cell_id))))?)?;
        }
        Ok(())
    }
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

#[derive(Serialize)]
struct SummaryCsvRow<'a> {
    cell_id: &'a str,
    iter: usize,
    mean_risk: f64,
    stderr: f64,
    n_reps: usize,
}

/// Writes the summary CSV (cell_id, iter, mean_risk, stderr, n_reps).
pub fn write_summary_csv<W: Write>(summaries: &[CellSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in summaries {
        for r in &s.rows {
            w.serialize(SummaryCsvRow { cell_id: &s.cell_id, iter: r.iter, mean_risk: r.mean_risk, stderr: r.stderr, n_reps: r.n_reps })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes two whitespace-separated columns (log10 n, log10 risk), skipping
/// points where either logarithm is undefined.
pub fn write_plot_data<W: Write>(curve: &[(usize, f64)], mut out: W) -> Result<()> {
    writeln!(out, "# log10_n log10_risk")?;
    for &(n, r) in curve {
        if n > 0 && r > 0.0 {
            writeln!(out, "{:.10} {:.10}", (n as f64).log10(), r.log10())?;
        }
    }
    Ok(())
}

/// Runs every cell and replication with the global worker pool.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.replications < 1 {
        return domain("replications must be at least 1");
    }
    if spec.cells.is_empty() {
        return domain("an experiment needs at least one cell");
    }
    let mut ids = std::collections::HashSet::new();
    for c in &spec.cells {
        if !ids.insert(c.cell_id()) {
            return domain(format!("duplicate cell id {}", c.cell_id()));
        }
    }
    // Resolve the problem of each replication, then every configuration, before running anything.
    let problems: Vec<SpectralProblem> = if spec.fresh_problem_per_replication && spec.problem.is_generated() {
        (0..spec.replications).map(|r| spec.problem_for(r)).collect::<Result<_>>()?
    } else {
        vec![spec.problem_for(0)?]
    };
    let configs: Vec<Vec<SolverConfig>> = spec
        .cells
        .iter()
        .map(|c| problems.iter().map(|p| c.config(p, &spec.checkpoints)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> = (0..spec.cells.len()).flat_map(|c| (0..spec.replications).map(move |r| (c, r))).collect();
    let outcomes: Vec<std::result::Result<RunRecord, RunFailure>> = tasks
        .par_iter()
        .map(|&(c, r)| {
            let cell = &spec.cells[c];
            let id = cell.cell_id();
            let pi = if problems.len() == 1 { 0 } else { r };
            let seed = derive_seed(spec.base_seed, &id, r as u64);
            run(&problems[pi], cell.oracle, &configs[c][pi], seed).map_err(|e| RunFailure {
                cell_id: id,
                replication: r,
                seed,
                message: e.to_string(),
            })
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut per_cell: Vec<Vec<usize>> = vec![Vec::new(); spec.cells.len()];
    for ((c, _), out) in tasks.iter().zip(outcomes) {
        match out {
            Ok(rec) => {
                per_cell[*c].push(records.len());
                records.push(rec);
            }
            Err(f) => failures.push(f),
        }
    }
    let summaries = spec
        .cells
        .iter()
        .zip(&per_cell)
        .map(|(cell, idx)| {
            let recs: Vec<&RunRecord> = idx.iter().map(|&i| &records[i]).collect();
            CellSummary::from_records(&cell.cell_id(), cell.algorithm, &recs)
        })
        .collect::<Result<_>>()?;
    let result = ExperimentResult { name: spec.name.clone(), records, failures, summaries };
    if let Some(dir) = &spec.output {
        result.write_outputs(dir)?;
    }
    Ok(result)
}

/// Runs an experiment on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_experiment(spec))
}

/// Rebuilds per-cell summaries from raw CSV rows, reporting the column each
/// algorithm reports. Rows are grouped by (algorithm, oracle) in first-seen order.
pub fn summarize_raw_rows(rows: &[crate::solvers::RawRow]) -> Result<Vec<(String, Vec<SummaryRow>)>> {
    use std::collections::BTreeMap;
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        let alg: Algorithm = r.algorithm.parse()?;
        let key = format!("{}|{}", r.algorithm, r.oracle);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        let row = crate::solvers::RunRow {
            iter: r.iter,
            risk_last: r.risk_last.unwrap_or(f64::NAN),
            risk_avg: r.risk_avg.unwrap_or(f64::NAN),
            risk_wavg: r.risk_wavg,
        };
        groups.entry(key).or_default().entry(r.iter).or_default().push(alg.reported(&row));
    }
    Ok(order
        .into_iter()
        .map(|k| {
            let rows = groups[&k]
                .iter()
                .map(|(&iter, v)| {
                    let (m, s) = mean_stderr(v);
                    SummaryRow { iter, mean_risk: m, stderr: s, n_reps: v.len() }
                })
                .collect();
            (k, rows)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(reps: usize) -> ExperimentSpec {
        ExperimentSpec {
            name: "t".into(),
            problem: ProblemSource::Random { d: 3, seed: 1 },
            overrides: ProblemOverrides::default(),
            cells: vec![
                CellSpec::explicit(Algorithm::AvGD, OracleKind::AdditiveGaussian, 50, 0.5, 0.0, 0.0),
                CellSpec::explicit(Algorithm::AvAccGD, OracleKind::AdditiveGaussian, 50, 0.5, 0.0, 1.0),
            ],
            replications: reps,
            base_seed: 9,
            checkpoints: CheckpointGrid::default(),
            fresh_problem_per_replication: false,
            output: None,
        }
    }

    #[test]
    fn single_replication_summary_equals_run() {
        let res = run_experiment(&spec(1)).unwrap();
        for (rec, s) in res.records.iter().zip(&res.summaries) {
            for (row, sr) in rec.rows.iter().zip(&s.rows) {
                assert_eq!(rec.config.algorithm.reported(row), sr.mean_risk);
                assert_eq!(sr.stderr, 0.0);
            }
        }
    }

    #[test]
    fn permuting_cells_keeps_records() {
        let a = run_experiment(&spec(3)).unwrap();
        let mut s = spec(3);
        s.cells.reverse();
        let b = run_experiment(&s).unwrap();
        for rec in &a.records {
            assert!(b.records.contains(rec));
        }
    }

    #[test]
    fn invalid_cell_aborts_before_running() {
        let mut s = spec(2);
        s.cells.push(CellSpec::explicit(Algorithm::AvGD, OracleKind::AdditiveGaussian, 50, 100.0, 0.0, 0.0).with_id("bad"));
        assert!(matches!(run_experiment(&s), Err(Error::Config(_))));
    }

    #[test]
    fn spec_json_roundtrip() {
        let s = spec(2);
        let text = serde_json::to_string_pretty(&s).unwrap();
        assert_eq!(ExperimentSpec::from_json(&text).unwrap(), s);
    }
}
