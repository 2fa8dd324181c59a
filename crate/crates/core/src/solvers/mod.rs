//! The recursion engine for (averaged, accelerated) stochastic gradient descent.
//!
//! One engine serves every algorithm. Plain runs use the regularized step
//! θₙ = θₙ₋₁ − γg − γλ(θₙ₋₁ − θ₀); accelerated runs evaluate the gradient at the
//! extrapolated point νₙ₋₁ = θₙ₋₁ + δ(θₙ₋₁ − θₙ₋₂) and set
//! θₙ = (1 − γλ)νₙ₋₁ − γg + γλθ₀. Both the uniform average θ̄ₙ and the linearly
//! weighted average θ̃ₙ are maintained online.

mod params;
mod record;

pub use params::{default_params, DefaultParams, Regime, RegimeInputs};
pub use record::{append_raw_csv, read_raw_csv, write_raw_csv, RawRow, RunRecord, RunRow};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{excess_risk, EigenVector};
use crate::oracles::{GradientOracle, OracleKind, SampledOracle};
use crate::problems::{effective_constants, SpectralProblem};

/// Relative slack allowed when checking admissibility inequalities.
pub const ADMISSIBILITY_SLACK: f64 = 1e-12;

/// Which recursion runs and which estimate is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// Last iterate of regularized SGD.
    #[serde(rename = "gd")]
    GD,
    /// Uniform average of regularized SGD iterates.
    #[serde(rename = "avgd")]
    AvGD,
    /// Last iterate of accelerated SGD.
    #[serde(rename = "accgd")]
    AccGD,
    /// Uniform average of accelerated SGD iterates.
    #[serde(rename = "avaccgd")]
    AvAccGD,
    /// Linearly weighted average of accelerated SGD iterates.
    #[serde(rename = "wavaccgd")]
    WAvAccGD,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Self::GD, Self::AvGD, Self::AccGD, Self::AvAccGD, Self::WAvAccGD];

    pub fn name(self) -> &'static str {
        match self {
            Self::GD => "gd",
            Self::AvGD => "avgd",
            Self::AccGD => "accgd",
            Self::AvAccGD => "avaccgd",
            Self::WAvAccGD => "wavaccgd",
        }
    }

    /// True when the momentum recursion is used.
    pub fn is_accelerated(self) -> bool {
        matches!(self, Self::AccGD | Self::AvAccGD | Self::WAvAccGD)
    }

    /// The risk this algorithm reports from a recorded row.
    pub fn reported(self, row: &RunRow) -> f64 {
        match self {
            Self::GD | Self::AccGD => row.risk_last,
            Self::AvGD | Self::AvAccGD => row.risk_avg,
            Self::WAvAccGD => row.risk_wavg.unwrap_or(f64::NAN),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        let alias = match key.as_str() {
            "sgd" => "gd",
            "avsgd" => "avgd",
            "accsgd" | "acc" => "accgd",
            "avaccsgd" | "avacc" => "avaccgd",
            "wavaccsgd" | "wavacc" => "wavaccgd",
            other => other,
        };
        Self::ALL.into_iter().find(|a| a.name() == alias).map_or_else(|| domain(format!("unknown algorithm {s:?}")), Ok)
    }
}

/// How the momentum coefficient evolves along a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentumSchedule {
    /// δ fixed for the whole run.
    #[default]
    Constant,
    /// Nesterov's schedule δₙ = (n − 1)/(n + 2) at step n.
    Nesterov,
}

/// The finite-horizon parameter bundle of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Step-size γ.
    pub gamma: f64,
    /// Regularization λ towards θ₀.
    pub lambda: f64,
    /// Momentum δ (ignored by non-accelerated algorithms).
    pub delta: f64,
    #[serde(default)]
    pub momentum: MomentumSchedule,
    /// Number of iterations n.
    pub horizon: usize,
    /// Strictly increasing iterations at which risks are recorded (0 allowed).
    pub checkpoints: Vec<usize>,
    /// Skip the admissibility checks (structural checks still apply).
    #[serde(default)]
    pub allow_invalid: bool,
}

impl SolverConfig {
    /// A configuration recording on the default logarithmic grid.
    pub fn new(algorithm: Algorithm, gamma: f64, lambda: f64, delta: f64, horizon: usize) -> Self {
        Self {
            algorithm,
            gamma,
            lambda,
            delta,
            momentum: MomentumSchedule::Constant,
            horizon,
            checkpoints: log_checkpoints(horizon, DEFAULT_POINTS_PER_DECADE),
            allow_invalid: false,
        }
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<usize>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn with_momentum(mut self, momentum: MomentumSchedule) -> Self {
        self.momentum = momentum;
        self
    }

    /// Momentum used at step n ≥ 1.
    pub fn delta_at(&self, n: usize) -> f64 {
        match self.momentum {
            MomentumSchedule::Constant => self.delta,
            MomentumSchedule::Nesterov => (n as f64 - 1.0) / (n as f64 + 2.0),
        }
    }

    /// Lower end (1 − √(γλ))/(1 + √(γλ)) of the admissible momentum range.
    pub fn delta_lower(&self) -> f64 {
        delta_lower(self.gamma, self.lambda)
    }

    /// Checks structure always and admissibility unless `allow_invalid` is set.
    pub fn validate(&self, problem: &SpectralProblem, oracle: OracleKind) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma = {} must be finite and non-negative", self.gamma));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda = {} must be finite and non-negative", self.lambda));
        }
        if !self.delta.is_finite() {
            return bad(format!("delta = {} must be finite", self.delta));
        }
        if self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return bad("checkpoints must be strictly increasing".into());
        }
        if let Some(&last) = self.checkpoints.last() {
            if last > self.horizon {
                return bad(format!("checkpoint {last} exceeds horizon {}", self.horizon));
            }
        }
        if self.allow_invalid {
            return Ok(());
        }
        let c = effective_constants(problem);
        let tol = 1.0 + ADMISSIBILITY_SLACK;
        if oracle.is_additive() {
            let g = self.gamma * (c.l + self.lambda);
            if g > tol {
                return bad(format!("gamma*(L+lambda) = {g} exceeds 1"));
            }
        } else {
            if self.gamma > c.gamma_max_stochastic * tol {
                return bad(format!("gamma = {} exceeds 1/(2R^2) = {}", self.gamma, c.gamma_max_stochastic));
            }
            if self.lambda > c.r2 / 2.0 * tol {
                return bad(format!("lambda = {} exceeds R^2/2 = {}", self.lambda, c.r2 / 2.0));
            }
        }
        if self.algorithm.is_accelerated() && self.momentum == MomentumSchedule::Constant {
            let lo = self.delta_lower();
            if self.delta < lo - ADMISSIBILITY_SLACK || self.delta > 1.0 + ADMISSIBILITY_SLACK {
                return bad(format!("delta = {} outside the admissible range [{lo}, 1]", self.delta));
            }
        }
        Ok(())
    }
}

/// (1 − √(γλ))/(1 + √(γλ)).
pub fn delta_lower(gamma: f64, lambda: f64) -> f64 {
    let q = (gamma * lambda).sqrt();
    (1.0 - q) / (1.0 + q)
}

/// Points per decade of the default checkpoint grid.
pub const DEFAULT_POINTS_PER_DECADE: usize = 25;

/// Logarithmic grid {round(10^{k/m})} ∩ [1, n], always containing 1 and n.
pub fn log_checkpoints(n: usize, per_decade: usize) -> Vec<usize> {
    if n == 0 {
        return vec![0];
    }
    let m = per_decade.max(1) as f64;
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let v = 10f64.powf(f64::from(k) / m).round() as usize;
        if v >= n {
            break;
        }
        if out.last() != Some(&v) {
            out.push(v);
        }
        k += 1;
    }
    out.push(n);
    out
}

/// Iterates and running averages of one run.
///
/// Coordinates are in the frame the run operates in: eigen-coordinates for
/// unrotated problems, ambient coordinates for rotated ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// θₙ.
    pub current: EigenVector,
    /// θₙ₋₁ (equal to θ₀ at n = 0).
    pub previous: EigenVector,
    /// θ̄ₙ, the uniform average of θ₀..θₙ.
    pub avg_uniform: EigenVector,
    /// θ̃ₙ, the average of θ₁..θₙ with weights proportional to k (θ₀ at n = 0).
    pub avg_weighted: EigenVector,
    /// θ₀, the regularization anchor.
    pub start: EigenVector,
    pub iter: usize,
}

impl SolverState {
    pub fn new(theta0: EigenVector) -> Self {
        Self {
            current: theta0.clone(),
            previous: theta0.clone(),
            avg_uniform: theta0.clone(),
            avg_weighted: theta0.clone(),
            start: theta0,
            iter: 0,
        }
    }

    /// νₙ = θₙ + δ(θₙ − θₙ₋₁), the point where accelerated runs query the gradient.
    pub fn extrapolation(&self, delta: f64, out: &mut [f64]) {
        for ((o, c), p) in out.iter_mut().zip(self.current.iter()).zip(self.previous.iter()) {
            *o = c + delta * (c - p);
        }
    }

    fn check_finite(&self) -> Result<()> {
        if self.current.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { iteration: self.iter, detail: "iterate is not finite".into() })
        }
    }
}

/// One regularized SGD step with a gradient evaluated at `state.current`.
pub fn sgd_step(state: &mut SolverState, grad: &[f64], cfg: &SolverConfig) -> Result<()> {
    let (g, l) = (cfg.gamma, cfg.lambda);
    std::mem::swap(&mut state.previous, &mut state.current);
    for (((c, p), gr), s) in state.current.iter_mut().zip(state.previous.iter()).zip(grad).zip(state.start.iter()) {
        *c = p - g * gr - g * l * (p - s);
    }
    state.iter += 1;
    state.check_finite()
}

/// One accelerated step with a gradient evaluated at the extrapolated point.
///
/// The momentum used is `cfg.delta_at(state.iter + 1)`.
pub fn acc_step(state: &mut SolverState, grad_at_extrapolation: &[f64], cfg: &SolverConfig) -> Result<()> {
    let (g, l) = (cfg.gamma, cfg.lambda);
    let delta = cfg.delta_at(state.iter + 1);
    std::mem::swap(&mut state.previous, &mut state.current);
    // After the swap `previous` holds θₙ₋₁ and `current` holds θₙ₋₂.
    for (((c, p), gr), s) in state.current.iter_mut().zip(state.previous.iter()).zip(grad_at_extrapolation).zip(state.start.iter()) {
        let nu = p + delta * (p - *c);
        *c = (1.0 - g * l) * nu - g * gr + g * l * s;
    }
    state.iter += 1;
    state.check_finite()
}

/// Folds `state.current` (iterate number `state.iter`) into both running averages.
pub fn update_averages(state: &mut SolverState) {
    let n = state.iter as f64;
    if state.iter == 0 {
        state.avg_uniform.copy_from_slice(&state.current);
        state.avg_weighted.copy_from_slice(&state.current);
        return;
    }
    let (a, b) = (n / (n + 1.0), 1.0 / (n + 1.0));
    let (wa, wb) = ((n - 1.0) / (n + 1.0), 2.0 / (n + 1.0));
    for ((u, w), c) in state.avg_uniform.iter_mut().zip(state.avg_weighted.iter_mut()).zip(state.current.iter()) {
        *u = a * *u + b * c;
        *w = wa * *w + wb * c;
    }
}

/// Maps between the run frame and eigen-coordinates.
struct Frame<'a> {
    problem: &'a SpectralProblem,
    eig_buf: Vec<f64>,
    grad_buf: Vec<f64>,
}

impl<'a> Frame<'a> {
    fn new(problem: &'a SpectralProblem) -> Self {
        let d = problem.dim();
        Self { problem, eig_buf: vec![0.0; d], grad_buf: vec![0.0; d] }
    }

    fn initial(&self) -> EigenVector {
        match &self.problem.rotation {
            None => self.problem.theta0.clone(),
            Some(rot) => {
                let mut out = vec![0.0; self.problem.dim()];
                rot.to_ambient(&self.problem.theta0, &mut out);
                out.into()
            }
        }
    }

    fn gradient(&mut self, oracle: &mut dyn GradientOracle, point: &[f64], out: &mut [f64]) {
        match &self.problem.rotation {
            None => oracle.gradient(point, out),
            Some(rot) => {
                rot.to_eigen(point, &mut self.eig_buf);
                oracle.gradient(&self.eig_buf, &mut self.grad_buf);
                rot.to_ambient(&self.grad_buf, out);
            }
        }
    }

    fn risk(&mut self, theta: &[f64]) -> f64 {
        let v = match &self.problem.rotation {
            None => theta,
            Some(rot) => {
                rot.to_eigen(theta, &mut self.eig_buf);
                &self.eig_buf
            }
        };
        excess_risk(v, self.problem).expect("state dimension matches problem")
    }
}

/// Runs a configuration with a seeded oracle of the given kind.
pub fn run(problem: &SpectralProblem, oracle: OracleKind, cfg: &SolverConfig, seed: u64) -> Result<RunRecord> {
    cfg.validate(problem, oracle)?;
    let mut src = SampledOracle::new(oracle, problem, seed);
    Ok(run_with_oracle(problem, oracle, cfg, seed, &mut src)?.0)
}

/// Runs a configuration against any gradient source and also returns the final state.
///
/// `oracle_kind` and `seed` are recorded as provenance and used for validation;
/// the gradients come from `oracle`.
pub fn run_with_oracle(
    problem: &SpectralProblem,
    oracle_kind: OracleKind,
    cfg: &SolverConfig,
    seed: u64,
    oracle: &mut dyn GradientOracle,
) -> Result<(RunRecord, SolverState)> {
    cfg.validate(problem, oracle_kind)?;
    let d = problem.dim();
    let mut frame = Frame::new(problem);
    let mut state = SolverState::new(frame.initial());
    let mut grad = vec![0.0; d];
    let mut point = vec![0.0; d];
    let accelerated = cfg.algorithm.is_accelerated();
    let mut rows = Vec::with_capacity(cfg.checkpoints.len());
    let mut next = cfg.checkpoints.iter().peekable();
    let record = |state: &SolverState, frame: &mut Frame, rows: &mut Vec<RunRow>| {
        rows.push(RunRow {
            iter: state.iter,
            risk_last: frame.risk(&state.current),
            risk_avg: frame.risk(&state.avg_uniform),
            risk_wavg: accelerated.then(|| frame.risk(&state.avg_weighted)),
        });
    };
    if next.peek() == Some(&&0) {
        record(&state, &mut frame, &mut rows);
        next.next();
    }
    for _ in 0..cfg.horizon {
        if accelerated {
            state.extrapolation(cfg.delta_at(state.iter + 1), &mut point);
            frame.gradient(oracle, &point, &mut grad);
            acc_step(&mut state, &grad, cfg)?;
        } else {
            frame.gradient(oracle, &state.current, &mut grad);
            sgd_step(&mut state, &grad, cfg)?;
        }
        update_averages(&mut state);
        if next.peek() == Some(&&state.iter) {
            record(&state, &mut frame, &mut rows);
            next.next();
        }
    }
    let run_id = format!("{}/{}/{}/{}", problem.id, cfg.algorithm, oracle_kind, seed);
    Ok((
        RunRecord {
            run_id,
            problem_id: problem.id.clone(),
            problem_seed: problem.seed,
            oracle: oracle_kind,
            seed,
            d,
            config: cfg.clone(),
            rows,
        },
        state,
    ))
}
