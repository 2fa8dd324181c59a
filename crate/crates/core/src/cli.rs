//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime abort (invalid configuration, numeric
//! blow-up, I/O), 2 usage error, 3 failed `--check`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::bounds::{
    bound_av_tighter, bound_cor1, bound_cor2, bound_lemma1, bound_lemma1_variants, bound_th1, bound_th2, bound_th3, BoundValue,
    Lemma1Variant,
};
use crate::analytic::rates::{rate_th5, rate_th6};
use crate::analytic::{exact_acc_risk_moment, exact_acc_risk_spectral, exact_avsgd_risk, AnalyticResult};
use crate::error::{Error, Result};
use crate::harness::fig1::{run_fig1, Fig1Options};
use crate::harness::{
    compare_mc_to_oracle, fit_rate, rate_map, run_experiment_with_workers, CellSpec, CellSummary, CheckpointGrid, ExperimentSpec,
    ProblemOverrides, ProblemSource, RateMapMode, RateMapOptions,
};
use crate::linalg::{EigenVector, Spectrum};
use crate::oracles::OracleKind;
use crate::problems::{effective_constants, make_fig1_problem, make_random_problem, make_source_problem, SourceCondition, SpectralProblem};
use crate::solvers::{write_raw_csv, Algorithm, MomentumSchedule, Regime};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LSQ_ACCEL_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lsq-accel",
    version,
    about = "Averaged and accelerated SGD for least squares: runs, exact risks, bounds and rate experiments"
)]
pub struct Cli {
    /// Default output directory for generated files
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for replications (default: available parallelism)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a problem file and print its constants
    Generate(GenerateArgs),
    /// Run solver replications and write raw and summary CSV files
    Run(RunArgs),
    /// Evaluate a convergence bound
    Bounds(BoundsArgs),
    /// Compute the exact expected risk of the averaged iterate
    Exact(ExactArgs),
    /// Fit rate exponents on source-condition problems
    Rates(RatesArgs),
    /// Compare Monte Carlo means with the exact expected risk
    Compare(CompareArgs),
    /// Reproduce the two synthetic experiments of Figure 1
    Fig1(Fig1Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpectrumKind {
    /// sᵢ = 1/i³ with a random unit displacement
    Fig1,
    /// sᵢ = i^(-1/b) with displacement set by the source exponent r
    Source,
    /// Log-uniform spectrum in [1e-3, 1] with random displacement and noise
    Random,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Shorthand for --spectrum fig1
    #[arg(long)]
    pub fig1: bool,
    /// Spectrum family
    #[arg(long, value_enum, default_value = "fig1")]
    pub spectrum: SpectrumKind,
    /// Dimension d (integer >= 1)
    #[arg(long, default_value_t = 25)]
    pub d: usize,
    /// Capacity exponent b in (0, 1] (source spectrum)
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    /// Source exponent r in [-1, 1] (source spectrum)
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// Residual variance sigma^2 >= 0 (unit: squared response)
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Additive-oracle noise scale tau^2 >= 0 (unit: squared response)
    #[arg(long)]
    pub tau2: Option<f64>,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Apply a random orthogonal rotation drawn from this seed
    #[arg(long)]
    pub rotate: Option<u64>,
    /// Output file (default: <out-dir>/problem.json)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Problem JSON file (default: the Figure 1 problem with --fig1-d and --problem-seed)
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Dimension of the default Figure 1 problem
    #[arg(long, default_value_t = 25)]
    pub fig1_d: usize,
    /// Seed of the default Figure 1 problem
    #[arg(long, default_value_t = 0)]
    pub problem_seed: u64,
}

impl ProblemArgs {
    fn source(&self) -> ProblemSource {
        match &self.problem {
            Some(path) => ProblemSource::File { path: path.clone() },
            None => ProblemSource::Fig1 { d: self.fig1_d, seed: self.problem_seed },
        }
    }

    fn load(&self) -> Result<SpectralProblem> {
        self.source().load(None)
    }
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Algorithm: gd, avgd, accgd, avaccgd or wavaccgd (aliases avsgd, accsgd, avaccsgd)
    #[arg(long, default_value = "avaccgd")]
    pub algo: String,
    /// Horizon n (number of iterations, integer >= 1)
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Parameter prescription: lemma1, th1, th2, cor2, th5 or th6
    #[arg(long)]
    pub regime: Option<String>,
    /// Step-size gamma > 0 (default: regime prescription, else 1/L)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Regularization lambda >= 0 (default 0)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Momentum delta in [(1-sqrt(gamma lambda))/(1+sqrt(gamma lambda)), 1] (default 1 for accelerated runs)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Use the Nesterov schedule delta_n = (n-1)/(n+2) instead of a constant momentum
    #[arg(long)]
    pub nesterov: bool,
    /// Source exponent r in [-1, 1] for th5/th6
    #[arg(long)]
    pub r: Option<f64>,
    /// Capacity exponent b in (0, 1] for th5/th6
    #[arg(long)]
    pub b: Option<f64>,
    /// Run even when the parameters violate the admissibility constraints
    #[arg(long)]
    pub allow_invalid: bool,
}

impl ParamArgs {
    fn cell(&self, oracle: OracleKind, problem: &SpectralProblem) -> Result<CellSpec> {
        let algorithm: Algorithm = self.algo.parse()?;
        let regime = self.regime.as_deref().map(str::parse::<Regime>).transpose()?;
        let gamma = match (regime, self.gamma) {
            (None, None) => Some(1.0 / problem.l()),
            (_, g) => g,
        };
        Ok(CellSpec {
            id: None,
            algorithm,
            oracle,
            horizon: self.n,
            regime,
            gamma,
            lambda: self.lambda,
            delta: self.delta,
            momentum: if self.nesterov { MomentumSchedule::Nesterov } else { MomentumSchedule::Constant },
            r: self.r,
            b: self.b,
            allow_invalid: self.allow_invalid,
        })
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment JSON file; when given, all other run flags are ignored
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Oracle: additive-gaussian, additive-sampled or multiplicative
    #[arg(long, default_value = "additive-gaussian")]
    pub oracle: String,
    /// Replications (integer >= 1)
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Base seed of the replication streams
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoints per decade of the logarithmic grid
    #[arg(long, default_value_t = 25)]
    pub per_decade: usize,
    /// Output directory (default: <out-dir>/run)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    Lemma1,
    Lemma1NormOnly,
    Lemma1Unstructured,
    Th1,
    Th2,
    Cor1,
    Th3,
    Cor2,
    AvTighter,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Bound to evaluate
    #[arg(long, value_enum)]
    pub theorem: Theorem,
    /// Problem JSON file; without it a one-dimensional problem is built from --s, --norm, --tau and --sigma
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Eigenvalue of the one-dimensional problem (> 0)
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// ‖θ₀ − θ*‖ of the one-dimensional problem
    #[arg(long, default_value_t = 1.0)]
    pub norm: f64,
    /// τ (not squared) of the one-dimensional problem
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    /// σ (not squared) of the one-dimensional problem
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Kurtosis κ >= 1 of the one-dimensional problem
    #[arg(long, default_value_t = 3.0)]
    pub kurtosis: f64,
    /// Step-size gamma > 0
    #[arg(long)]
    pub gamma: f64,
    /// Regularization lambda >= 0
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Horizon n >= 1
    #[arg(long)]
    pub n: usize,
    /// (r, b) pairs for th3, cor2 and av-tighter, as "r:b,r:b"
    #[arg(long, default_value = "0:0")]
    pub pairs: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExactMethod {
    Moment,
    Spectral,
    Avsgd,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Evaluation route (default: avsgd for non-accelerated algorithms, moment otherwise)
    #[arg(long, value_enum)]
    pub method: Option<ExactMethod>,
    /// Checkpoints per decade
    #[arg(long, default_value_t = 25)]
    pub per_decade: usize,
    /// Output CSV (default: <out-dir>/exact.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    /// Capacity exponent b in (0, 1]
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    /// Comma-separated source exponents r in [-1, 1]
    #[arg(long, default_value = "0,0.4,0.75")]
    pub r: String,
    /// Truncation dimension d
    #[arg(long, default_value_t = 20_000)]
    pub d: usize,
    /// Smallest horizon as a power of two
    #[arg(long, default_value_t = 7)]
    pub log2_min: u32,
    /// Largest horizon as a power of two
    #[arg(long, default_value_t = 13)]
    pub log2_max: u32,
    /// Problem seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use this many Monte Carlo replications instead of the exact risk
    #[arg(long)]
    pub mc_reps: Option<usize>,
    /// Allowed truncated tail as a fraction of the smallest risk
    #[arg(long, default_value_t = 1e-3)]
    pub tail_fraction: f64,
    /// Only print the predicted exponents
    #[arg(long)]
    pub predict_only: bool,
    /// Output CSV (default: <out-dir>/rates.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Replications
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    /// Base seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Multiply τ used by the exact computation (negative control when != 1)
    #[arg(long, default_value_t = 1.0)]
    pub tau_scale: f64,
    /// Checkpoints per decade
    #[arg(long, default_value_t = 5)]
    pub per_decade: usize,
    /// Exit with code 3 when the comparison is flagged
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct Fig1Args {
    /// Dimension
    #[arg(long, default_value_t = 25)]
    pub d: usize,
    /// Iterations per curve
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Replications
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Base seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest n of the slope fit window
    #[arg(long, default_value_t = 100)]
    pub fit_min: usize,
    /// Exit with code 3 when a slope or ordering check fails
    #[arg(long)]
    pub check: bool,
    /// Output directory (default: <out-dir>/fig1)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Domain(_) | Error::Format(_) => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

fn out_path(cli: &Cli, explicit: &Option<PathBuf>, default: &str) -> Result<PathBuf> {
    let p = explicit.clone().unwrap_or_else(|| cli.out_dir.join(default));
    if let Some(parent) = p.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(p)
}

fn workers(cli: &Cli) -> usize {
    cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Run(a) => run_cmd(cli, a),
        Command::Bounds(a) => bounds(a),
        Command::Exact(a) => exact(cli, a),
        Command::Rates(a) => rates(cli, a),
        Command::Compare(a) => compare(cli, a),
        Command::Fig1(a) => fig1(cli, a),
    }
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<i32> {
    let kind = if a.fig1 { SpectrumKind::Fig1 } else { a.spectrum };
    let (mut p, r, b) = match kind {
        SpectrumKind::Fig1 => (make_fig1_problem(a.d, a.seed)?, 0.0, 1.0),
        SpectrumKind::Source => (make_source_problem(a.d, a.b, a.r, a.seed)?.0, a.r, a.b),
        SpectrumKind::Random => (make_random_problem(a.d, a.seed)?, 0.0, 1.0),
    };
    if a.sigma2.is_some() || a.tau2.is_some() {
        let (s, t) = (a.sigma2.unwrap_or(p.sigma2), a.tau2.unwrap_or(p.tau2));
        p = p.with_noise(s, t)?;
    }
    if let Some(seed) = a.rotate {
        p = p.with_rotation(seed);
    }
    let path = out_path(cli, &a.out, "problem.json")?;
    p.write_json(&path)?;
    let c = effective_constants(&p);
    let sc = SourceCondition::of(&p, r, b)?;
    println!("wrote {}", path.display());
    println!("id          {}", p.id);
    println!("d           {}", p.dim());
    println!("R^2         {:.6e}", c.r2);
    println!("L           {:.6e}", c.l);
    println!("1/L         {:.6e}", c.gamma_max_additive);
    println!("1/(2R^2)    {:.6e}", c.gamma_max_stochastic);
    println!("tr S^{b}     {:.6e}", sc.trace_b);
    println!("|S^(r/2)D0| {:.6e}  (r = {r})", sc.norm_r.sqrt());
    Ok(EXIT_OK)
}

fn run_cmd(cli: &Cli, a: &RunArgs) -> Result<i32> {
    let spec = match &a.spec {
        Some(path) => ExperimentSpec::read_json(path)?,
        None => {
            let oracle: OracleKind = a.oracle.parse()?;
            let problem = a.problem.load()?;
            ExperimentSpec {
                name: "run".into(),
                problem: a.problem.source(),
                overrides: ProblemOverrides::default(),
                cells: vec![a.params.cell(oracle, &problem)?],
                replications: a.reps,
                base_seed: a.seed,
                checkpoints: CheckpointGrid::Log { per_decade: a.per_decade },
                fresh_problem_per_replication: false,
                output: None,
            }
        }
    };
    let res = run_experiment_with_workers(&spec, workers(cli))?;
    let dir = match (&a.out, &spec.output) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => d.clone(),
        (None, None) => cli.out_dir.join("run"),
    };
    res.write_outputs(&dir)?;
    for f in &res.failures {
        eprintln!("replication {} of {} aborted: {}", f.replication, f.cell_id, f.message);
    }
    for s in &res.summaries {
        print_summary(s);
    }
    println!("wrote {}", dir.display());
    Ok(if res.failures.is_empty() { EXIT_OK } else { EXIT_RUNTIME })
}

fn print_summary(s: &CellSummary) {
    if let Some(last) = s.last() {
        println!("{:<32} n = {:<8} mean risk {:.6e} +- {:.2e} ({} reps)", s.cell_id, last.iter, last.mean_risk, last.stderr, last.n_reps);
    }
    if let Ok(fit) = fit_rate(&s.curve(), crate::harness::default_window(&s.curve())) {
        println!("{:<32} slope {:.3} over [{}, {}]", "", fit.slope, fit.n_min, fit.n_max);
    }
}

fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (r, b) = pair.split_once(':').ok_or_else(|| Error::Domain(format!("pair {pair:?} is not of the form r:b")))?;
            let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| Error::Domain(format!("{x:?}: {e}")));
            Ok((parse(r)?, parse(b)?))
        })
        .collect()
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| Error::Domain(format!("{x:?}: {e}")))).collect()
}

fn scalar_problem(a: &BoundsArgs) -> Result<SpectralProblem> {
    SpectralProblem::new(
        "scalar",
        0,
        Spectrum::new(vec![a.s])?,
        EigenVector::zeros(1),
        vec![a.norm].into(),
        a.sigma * a.sigma,
        a.tau * a.tau,
        a.kurtosis,
    )
}

fn bounds(a: &BoundsArgs) -> Result<i32> {
    let p = match &a.problem {
        Some(path) => SpectralProblem::read_json(path)?,
        None => scalar_problem(a)?,
    };
    let pairs = parse_pairs(&a.pairs)?;
    let v: BoundValue = match a.theorem {
        Theorem::Lemma1 => bound_lemma1(&p, a.gamma, a.lambda, a.n)?,
        Theorem::Lemma1NormOnly => bound_lemma1_variants(&p, a.gamma, a.lambda, a.n, Lemma1Variant::NormOnly, None)?,
        Theorem::Lemma1Unstructured => bound_lemma1_variants(&p, a.gamma, a.lambda, a.n, Lemma1Variant::Unstructured, None)?,
        Theorem::Th1 => bound_th1(&p, a.gamma, a.lambda, a.n)?,
        Theorem::Th2 => bound_th2(&p, a.gamma, a.lambda, a.n)?,
        Theorem::Cor1 => bound_cor1(&p, a.gamma, a.n)?,
        Theorem::Th3 => bound_th3(&p, a.gamma, a.lambda, a.n, &pairs)?,
        Theorem::Cor2 => bound_cor2(&p, a.gamma, a.n, &pairs)?,
        Theorem::AvTighter => bound_av_tighter(&p, a.gamma, a.n, &pairs)?,
    };
    println!("{} = {}", v.theorem, v.total);
    for (k, x) in &v.components {
        println!("  {k:<10} {x}");
    }
    if let Some((r, b)) = v.argmin {
        println!("  argmin     r = {r}, b = {b}");
    }
    Ok(EXIT_OK)
}

fn exact(cli: &Cli, a: &ExactArgs) -> Result<i32> {
    let problem = a.problem.load()?;
    let cell = a.params.cell(OracleKind::AdditiveGaussian, &problem)?;
    let cfg = cell.config(&problem, &CheckpointGrid::Log { per_decade: a.per_decade })?;
    let method = a.method.unwrap_or(if cfg.algorithm.is_accelerated() { ExactMethod::Moment } else { ExactMethod::Avsgd });
    let res: AnalyticResult = match method {
        ExactMethod::Moment => exact_acc_risk_moment(&problem, &cfg, &cfg.checkpoints)?,
        ExactMethod::Spectral => exact_acc_risk_spectral(&problem, &cfg, &cfg.checkpoints)?,
        ExactMethod::Avsgd => exact_avsgd_risk(&problem, &cfg, &cfg.checkpoints)?,
    };
    let path = out_path(cli, &a.out, "exact.csv")?;
    write_raw_csv(res.raw_rows(&problem, &cfg), std::fs::File::create(&path)?)?;
    if let Some(last) = res.rows.last() {
        println!(
            "n = {}: risk {:.6e} (bias_reg {:.3e}, bias_opt {:.3e}, variance {:.3e})",
            last.n, last.exact_risk, last.bias_reg, last.bias_opt, last.variance
        );
    }
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn rates(cli: &Cli, a: &RatesArgs) -> Result<i32> {
    let rs = parse_list(&a.r)?;
    if a.predict_only {
        println!("{:>6} {:>10} {:>7} {:>10} {:>7}", "r", "th5", "valid", "th6", "valid");
        for &r in &rs {
            let (p5, p6) = (rate_th5(r, a.b)?, rate_th6(r, a.b)?);
            println!("{r:>6} {:>10.4} {:>7} {:>10.4} {:>7}", p5.exponent, p5.valid, p6.exponent, p6.valid);
        }
        return Ok(EXIT_OK);
    }
    if a.log2_max < a.log2_min + 4 {
        return Err(Error::Domain("need at least five horizons (log2-max >= log2-min + 4)".into()));
    }
    let horizons: Vec<usize> = (a.log2_min..=a.log2_max).map(|k| 1usize << k).collect();
    let mode = match a.mc_reps {
        Some(k) => RateMapMode::MonteCarlo { replications: k },
        None => RateMapMode::Exact,
    };
    let table = rate_map(a.b, &rs, a.d, &horizons, RateMapOptions { seed: a.seed, mode, tail_fraction: a.tail_fraction })?;
    let path = out_path(cli, &a.out, "rates.csv")?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["r", "algorithm", "regime", "fitted", "predicted", "optimal", "valid"])?;
    println!("{:>6} {:<9} {:>9} {:>10} {:>6}", "r", "algorithm", "fitted", "predicted", "valid");
    for row in &table.rows {
        println!("{:>6} {:<9} {:>9.4} {:>10.4} {:>6}", row.r, row.algorithm.name(), row.fit.slope, row.predicted, row.valid);
        w.write_record([
            row.r.to_string(),
            row.algorithm.name().to_string(),
            row.regime.name().to_string(),
            row.fit.slope.to_string(),
            row.predicted.to_string(),
            row.optimal.to_string(),
            row.valid.to_string(),
        ])?;
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn compare(cli: &Cli, a: &CompareArgs) -> Result<i32> {
    let problem = a.problem.load()?;
    let cell = a.params.cell(OracleKind::AdditiveGaussian, &problem)?.with_id("compare");
    let grid = CheckpointGrid::Log { per_decade: a.per_decade };
    let cfg = cell.config(&problem, &grid)?;
    let spec = ExperimentSpec {
        name: "compare".into(),
        problem: ProblemSource::Inline { problem: Box::new(problem.clone()) },
        overrides: ProblemOverrides::default(),
        cells: vec![cell],
        replications: a.reps,
        base_seed: a.seed,
        checkpoints: grid,
        fresh_problem_per_replication: false,
        output: None,
    };
    let res = run_experiment_with_workers(&spec, workers(cli))?;
    let scaled = problem.clone().with_noise(problem.sigma2, problem.tau2 * a.tau_scale * a.tau_scale)?;
    let exact = if cfg.algorithm.is_accelerated() {
        exact_acc_risk_moment(&scaled, &cfg, &cfg.checkpoints)?
    } else {
        exact_avsgd_risk(&scaled, &cfg, &cfg.checkpoints)?
    };
    // Compare on the uniform average, which is what the exact oracle computes.
    let mut summary = res.summaries[0].clone();
    summary.algorithm = if cfg.algorithm.is_accelerated() { Algorithm::AvAccGD } else { Algorithm::AvGD };
    let recs: Vec<_> = res.records.iter().collect();
    summary = CellSummary::from_records(&summary.cell_id, summary.algorithm, &recs)?;
    let report = compare_mc_to_oracle(&summary, &exact)?;
    println!("{:>8} {:>14} {:>12} {:>14} {:>8}", "iter", "mc_mean", "stderr", "exact", "z");
    for r in &report.rows {
        println!("{:>8} {:>14.6e} {:>12.3e} {:>14.6e} {:>8.2}", r.iter, r.mc_mean, r.mc_stderr, r.exact, r.z);
    }
    println!(
        "max |z| = {:.2}, fraction |z| > 2 = {:.3}: {}",
        report.max_abs_z,
        report.frac_over_soft,
        if report.flagged { "FLAGGED" } else { "consistent" }
    );
    Ok(if a.check && report.flagged { EXIT_CHECK } else { EXIT_OK })
}

fn fig1(cli: &Cli, a: &Fig1Args) -> Result<i32> {
    let opts = Fig1Options { d: a.d, horizon: a.n, replications: a.reps, base_seed: a.seed, per_decade: 25, fit_window: (a.fit_min, a.n) };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers(cli))
        .build()
        .map_err(|e| Error::Domain(format!("cannot build worker pool: {e}")))?;
    let report = pool.install(|| run_fig1(&opts))?;
    let dir = a.out.clone().unwrap_or_else(|| cli.out_dir.join("fig1"));
    report.write_outputs(&dir)?;
    for p in [&report.bias, &report.variance] {
        for (id, f) in &p.fits {
            println!("{:<9} {:<9} slope {:>7.3}  final {:.3e}", p.panel.name(), id, f.slope, p.final_mean(id).unwrap_or(f64::NAN));
        }
    }
    for c in &report.checks {
        println!("[{}] {} ({})", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {}", dir.display());
    Ok(if a.check && !report.all_passed() { EXIT_CHECK } else { EXIT_OK })
}

/// Reads a problem file, for callers that only have a path.
pub fn load_problem(path: &Path) -> Result<SpectralProblem> {
    SpectralProblem::read_json(path)
}
