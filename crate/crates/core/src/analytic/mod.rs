//! Exact expected excess risk of the averaged iterates under the Gaussian
//! additive oracle, and calculators for the convergence bounds.
//!
//! Per eigen-component the error eₖ = θₖ − θ* obeys the scalar recursion
//! eₖ = (1+δ)T eₖ₋₁ − δT eₖ₋₂ + γλΔ₀ + γξₖ with T = 1 − γ(s+λ) and noise
//! variance v = τ²s. Writing xⱼ for its impulse response (x₀ = 1, x₋₁ = 0) and
//! uₖ = Σ_{j<k} xⱼ, the mean of the average θ̄ₙ is
//! m = Δ̃ (uₙ₊₁ − δT uₙ)/(n+1) + λΔ₀/(s+λ) with Δ̃ = sΔ₀/(s+λ), and its variance
//! is γ²v Σ_{m=1}^{n} uₘ²/(n+1)². The three routes below evaluate exactly these
//! quantities: by direct propagation, by trigonometric closed forms, and by the
//! geometric closed form of the momentum-free case.

mod avsgd;
pub mod bounds;
mod moment;
pub mod rates;
mod spectral;

pub use avsgd::exact_avsgd_risk;
pub use moment::exact_acc_risk_moment;
pub use spectral::{classify, discriminant, exact_acc_risk_spectral, RootClass, COALESCENCE_THRESHOLD};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;
use crate::oracles::OracleKind;
use crate::problems::SpectralProblem;
use crate::solvers::{MomentumSchedule, RawRow, SolverConfig};

/// Exact risk decomposition at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub n: usize,
    /// E f(θ̄ₙ) − f(θ*).
    pub exact_risk: f64,
    /// Risk of the ridge offset λΔ₀/(Σ+λ) alone.
    pub bias_reg: f64,
    /// Remaining noise-free risk, including the cross term with the ridge offset.
    pub bias_opt: f64,
    /// Contribution of the gradient noise.
    pub variance: f64,
}

/// Exact expected risks at a list of checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticResult {
    /// Which evaluation route produced the values ("moment", "spectral" or "avsgd").
    pub method: String,
    pub rows: Vec<AnalyticRow>,
}

impl AnalyticResult {
    pub fn risks(&self) -> Vec<(usize, f64)> {
        self.rows.iter().map(|r| (r.n, r.exact_risk)).collect()
    }

    /// Raw CSV rows with algorithm "analytic:<method>"; the exact value sits in risk_avg.
    pub fn raw_rows(&self, problem: &SpectralProblem, cfg: &SolverConfig) -> Vec<RawRow> {
        self.rows
            .iter()
            .map(|r| RawRow {
                run_id: format!("{}/analytic:{}", problem.id, self.method),
                algorithm: format!("analytic:{}", self.method),
                oracle: OracleKind::AdditiveGaussian.name().to_string(),
                d: problem.dim(),
                n: cfg.horizon,
                gamma: cfg.gamma,
                lambda: cfg.lambda,
                delta: cfg.delta,
                seed: problem.seed,
                iter: r.n,
                risk_last: None,
                risk_avg: Some(r.exact_risk),
                risk_wavg: None,
            })
            .collect()
    }
}

/// Per-component data of the second-order linear system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub s: f64,
    /// a = γ(s+λ) = 1 − T.
    pub a: f64,
    /// T = 1 − γ(s+λ).
    pub t: f64,
    /// Noise intensity v = τ²s.
    pub v: f64,
    /// Δ̃ = sΔ₀/(s+λ), the displacement from the ridge fixed point.
    pub delta_tilde: f64,
    /// λΔ₀/(s+λ), the ridge offset of the fixed point.
    pub offset: f64,
}

impl Component {
    /// Transfer matrix F = [[(1+δ)T, −δT], [1, 0]].
    pub fn transfer(&self, delta: f64) -> [[f64; 2]; 2] {
        [[(1.0 + delta) * self.t, -delta * self.t], [1.0, 0.0]]
    }
}

/// The eigen-decoupled linear system of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSystem {
    pub gamma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub components: Vec<Component>,
}

impl TransferSystem {
    /// Builds the system, validating the configuration against the additive oracle.
    pub fn new(problem: &SpectralProblem, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate(problem, OracleKind::AdditiveGaussian)?;
        if cfg.momentum != MomentumSchedule::Constant {
            return Err(Error::UnsupportedRegime("exact risks assume a constant momentum; the Nesterov schedule is time-varying".into()));
        }
        let (g, l) = (cfg.gamma, cfg.lambda);
        let delta0 = problem.delta0();
        let mut components = Vec::with_capacity(problem.dim());
        for (&s, &d0) in problem.spectrum.values().iter().zip(delta0.iter()) {
            let a = g * (s + l);
            if a.is_nan() || a <= 0.0 {
                return Err(Error::Domain("I - F is singular: gamma*(s+lambda) = 0".into()));
            }
            components.push(Component { s, a, t: 1.0 - a, v: problem.tau2 * s, delta_tilde: s * d0 / (s + l), offset: l * d0 / (s + l) });
        }
        Ok(Self { gamma: g, lambda: l, delta: cfg.delta, components })
    }
}

pub(crate) fn check_checkpoints(checkpoints: &[usize]) -> Result<()> {
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("checkpoints must be strictly increasing".into()));
    }
    Ok(())
}

/// Accumulates per-component contributions in a fixed order.
pub(crate) struct RowAccumulator {
    sums: Vec<[CompensatedSum; 4]>,
}

impl RowAccumulator {
    pub(crate) fn new(len: usize) -> Self {
        Self { sums: vec![[CompensatedSum::new(); 4]; len] }
    }

    /// Adds one component's contribution at checkpoint index `idx`.
    ///
    /// `m_opt` is the mean of the averaged error relative to the ridge offset and
    /// `var_sum` the accumulated Σ uₘ²; `np1` is n + 1.
    #[inline]
    pub(crate) fn add(&mut self, idx: usize, c: &Component, gamma: f64, m_opt: f64, var_sum: f64, np1: f64) {
        let half_s = 0.5 * c.s;
        let bias_reg = half_s * c.offset * c.offset;
        let bias_opt = half_s * m_opt * (m_opt + 2.0 * c.offset);
        let variance = half_s * gamma * gamma * c.v * var_sum / (np1 * np1);
        let acc = &mut self.sums[idx];
        acc[0].add(bias_reg + bias_opt + variance);
        acc[1].add(bias_reg);
        acc[2].add(bias_opt);
        acc[3].add(variance);
    }

    pub(crate) fn finish(self, method: &str, checkpoints: &[usize]) -> AnalyticResult {
        AnalyticResult {
            method: method.to_string(),
            rows: checkpoints
                .iter()
                .zip(self.sums)
                .map(|(&n, s)| AnalyticRow {
                    n,
                    exact_risk: s[0].value(),
                    bias_reg: s[1].value(),
                    bias_opt: s[2].value(),
                    variance: s[3].value(),
                })
                .collect(),
        }
    }
}
