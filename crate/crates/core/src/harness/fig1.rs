//! The two synthetic experiments of Figure 1: a noiseless run isolating the
//! bias and a run started at the optimum isolating the variance.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    fit_rate, run_experiment, CellSpec, CheckpointGrid, ExperimentResult, ExperimentSpec, ProblemOverrides, ProblemSource, RateFit,
};
use crate::error::Result;
use crate::oracles::OracleKind;
use crate::problems::make_fig1_problem;
use crate::solvers::{Algorithm, MomentumSchedule};

/// Cell ids of the three compared methods.
pub const AVSGD: &str = "avsgd";
pub const ACCSGD: &str = "accsgd";
pub const AVACCSGD: &str = "avaccsgd";

/// Settings of the Figure 1 reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Options {
    pub d: usize,
    pub horizon: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub per_decade: usize,
    /// Window of the reported slopes.
    pub fit_window: (usize, usize),
}

impl Default for Fig1Options {
    fn default() -> Self {
        Self { d: 25, horizon: 10_000, replications: 10, base_seed: 0, per_decade: 25, fit_window: (100, 10_000) }
    }
}

/// Which of the two experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Panel {
    /// ‖θ₀ − θ*‖ = 1 and no noise.
    Bias,
    /// θ₀ = θ* and unit noise.
    Variance,
}

impl Panel {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bias => "bias",
            Self::Variance => "variance",
        }
    }
}

/// Results of one panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelResult {
    pub panel: Panel,
    pub gamma: f64,
    pub experiment: ExperimentResult,
    /// Slope fit per cell id.
    pub fits: Vec<(String, RateFit)>,
}

impl PanelResult {
    pub fn fit(&self, cell: &str) -> Option<&RateFit> {
        self.fits.iter().find(|f| f.0 == cell).map(|f| &f.1)
    }

    pub fn final_mean(&self, cell: &str) -> Option<f64> {
        self.experiment.summary(cell).and_then(|s| s.last()).map(|r| r.mean_risk)
    }
}

/// One pass/fail assertion of the reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Both panels and the checks on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Report {
    pub bias: PanelResult,
    pub variance: PanelResult,
    pub checks: Vec<Fig1Check>,
}

impl Fig1Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Writes each panel's CSV and plot files plus fits.csv into `dir`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.bias.experiment.write_outputs(dir.join("bias"))?;
        self.variance.experiment.write_outputs(dir.join("variance"))?;
        let mut w = csv::Writer::from_path(dir.join("fits.csv"))?;
        w.write_record(["panel", "cell_id", "slope", "intercept", "n_min", "n_max", "r_squared"])?;
        for p in [&self.bias, &self.variance] {
            for (id, f) in &p.fits {
                w.write_record([
                    p.panel.name().to_string(),
                    id.clone(),
                    f.slope.to_string(),
                    f.intercept.to_string(),
                    f.n_min.to_string(),
                    f.n_max.to_string(),
                    f.r_squared.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Experiment description of one panel: γ = 1/tr Σ, λ = 0, Gaussian additive
/// oracle, a fresh random problem per replication.
pub fn panel_spec(panel: Panel, opts: &Fig1Options) -> Result<ExperimentSpec> {
    let gamma = 1.0 / make_fig1_problem(opts.d, opts.base_seed)?.spectrum.trace();
    let n = opts.horizon;
    let mut acc = CellSpec::explicit(Algorithm::AccGD, OracleKind::AdditiveGaussian, n, gamma, 0.0, 0.0).with_id(ACCSGD);
    acc.momentum = MomentumSchedule::Nesterov;
    let overrides = match panel {
        Panel::Bias => ProblemOverrides { sigma2: Some(0.0), tau2: Some(0.0), ..Default::default() },
        Panel::Variance => ProblemOverrides { sigma2: Some(1.0), tau2: Some(1.0), displacement_scale: Some(0.0), ..Default::default() },
    };
    Ok(ExperimentSpec {
        name: format!("fig1-{}", panel.name()),
        problem: ProblemSource::Fig1 { d: opts.d, seed: opts.base_seed },
        overrides,
        cells: vec![
            CellSpec::explicit(Algorithm::AvGD, OracleKind::AdditiveGaussian, n, gamma, 0.0, 0.0).with_id(AVSGD),
            acc,
            CellSpec::explicit(Algorithm::AvAccGD, OracleKind::AdditiveGaussian, n, gamma, 0.0, 1.0).with_id(AVACCSGD),
        ],
        replications: opts.replications,
        base_seed: opts.base_seed.wrapping_add(match panel {
            Panel::Bias => 0,
            Panel::Variance => 1,
        }),
        checkpoints: CheckpointGrid::Log { per_decade: opts.per_decade },
        fresh_problem_per_replication: true,
        output: None,
    })
}

/// Runs one panel and fits its slopes.
pub fn run_panel(panel: Panel, opts: &Fig1Options) -> Result<PanelResult> {
    let spec = panel_spec(panel, opts)?;
    let gamma = spec.cells[0].gamma.unwrap_or(f64::NAN);
    let experiment = run_experiment(&spec)?;
    let fits =
        experiment.summaries.iter().map(|s| Ok((s.cell_id.clone(), fit_rate(&s.curve(), opts.fit_window)?))).collect::<Result<_>>()?;
    Ok(PanelResult { panel, gamma, experiment, fits })
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

/// Runs both panels and evaluates the expected qualitative behaviour.
pub fn run_fig1(opts: &Fig1Options) -> Result<Fig1Report> {
    let bias = run_panel(Panel::Bias, opts)?;
    let variance = run_panel(Panel::Variance, opts)?;
    let slope = |p: &PanelResult, c: &str| p.fit(c).map_or(f64::NAN, |f| f.slope);
    let last = |p: &PanelResult, c: &str| p.final_mean(c).unwrap_or(f64::NAN);
    let mut checks = Vec::new();
    let mut check = |name: &str, passed: bool, detail: String| checks.push(Fig1Check { name: name.into(), passed, detail });

    let s = slope(&bias, AVACCSGD);
    check("bias: avaccsgd slope <= -1.8", s <= -1.8, format!("slope {s:.3}"));
    let s = slope(&bias, ACCSGD);
    check("bias: accsgd slope <= -1.8", s <= -1.8, format!("slope {s:.3}"));
    let (a, v) = (last(&bias, ACCSGD), last(&bias, AVACCSGD));
    check("bias: accsgd final <= avaccsgd final", a <= v, format!("{a:.3e} vs {v:.3e}"));
    let s = slope(&bias, AVSGD);
    check("bias: avsgd slope in [-1.25, -0.75]", in_range(s, -1.25, -0.75), format!("slope {s:.3}"));

    let s = slope(&variance, AVSGD);
    check("variance: avsgd slope in [-1.25, -0.75]", in_range(s, -1.25, -0.75), format!("slope {s:.3}"));
    let s = slope(&variance, AVACCSGD);
    check("variance: avaccsgd slope in [-1.25, -0.75]", in_range(s, -1.25, -0.75), format!("slope {s:.3}"));
    let (a, v) = (last(&variance, ACCSGD), last(&variance, AVACCSGD));
    check("variance: accsgd final >= 10x avaccsgd final", a >= 10.0 * v, format!("{a:.3e} vs {v:.3e}"));

    Ok(Fig1Report { bias, variance, checks })
}
