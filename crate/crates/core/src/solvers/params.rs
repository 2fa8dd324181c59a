//! Finite-horizon parameter prescriptions.

use serde::{Deserialize, Serialize};

use super::{delta_lower, log_checkpoints, Algorithm, SolverConfig, DEFAULT_POINTS_PER_DECADE};
use crate::error::{domain, Error, Result};
use crate::problems::{effective_constants, SpectralProblem};

/// Named parameter prescriptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// λ = 1/(γn) with the largest additive step satisfying γ(L + λ) ≤ 1.
    Lemma1,
    /// λ = 1/(γn) with γ = 1/(2R²), for the least-mean-squares oracle.
    Th1,
    /// λ = 0, δ = 1, γ = 1/L.
    Th2,
    /// λ = 1/(γ(n+1)²), δ = 1 − 2/(n+2).
    Cor2,
    /// Averaged SGD tuned for capacity b and source r.
    Th5,
    /// Averaged accelerated SGD tuned for capacity b and source r.
    Th6,
}

impl Regime {
    pub const ALL: [Regime; 6] = [Self::Lemma1, Self::Th1, Self::Th2, Self::Cor2, Self::Th5, Self::Th6];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lemma1 => "lemma1",
            Self::Th1 => "th1",
            Self::Th2 => "th2",
            Self::Cor2 => "cor2",
            Self::Th5 => "th5",
            Self::Th6 => "th6",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s.to_ascii_lowercase()).map_or_else(|| domain(format!("unknown regime {s:?}")), Ok)
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional inputs of a prescription.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeInputs {
    /// Requested step-size; the regime default is used when absent.
    pub gamma: Option<f64>,
    /// Source exponent (th5, th6).
    pub r: Option<f64>,
    /// Capacity exponent (th5, th6).
    pub b: Option<f64>,
}

/// A prescribed configuration and whether the step had to be clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultParams {
    pub config: SolverConfig,
    /// True when the prescribed γ exceeded the admissible maximum and was lowered.
    pub clipped: bool,
}

fn need(x: Option<f64>, name: &str, regime: Regime) -> Result<f64> {
    x.ok_or_else(|| Error::Domain(format!("regime {regime} needs {name}")))
}

fn clip(gamma: f64, max: f64) -> (f64, bool) {
    if gamma > max {
        (max, true)
    } else {
        (gamma, false)
    }
}

fn check_rb(r: f64, b: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&r) || !(b > 0.0 && b <= 1.0) {
        return domain(format!("need r in [-1, 1] and b in (0, 1], got r = {r}, b = {b}"));
    }
    Ok(())
}

/// Parameters prescribed by `regime` for horizon `n`.
pub fn default_params(
    problem: &SpectralProblem,
    algorithm: Algorithm,
    n: usize,
    regime: Regime,
    inputs: RegimeInputs,
) -> Result<DefaultParams> {
    if n < 1 {
        return domain("horizon must be at least 1");
    }
    let c = effective_constants(problem);
    let nf = n as f64;
    let infeasible = |m: String| Err(Error::Config(format!("regime {regime} infeasible at n = {n}: {m}")));
    let (gamma, lambda, acc_delta, clipped) = match regime {
        Regime::Lemma1 => {
            let max = (1.0 - 1.0 / nf) / c.l;
            if max <= 0.0 {
                return infeasible("gamma*L + 1/n <= 1 has no positive solution".into());
            }
            let (g, cl) = clip(inputs.gamma.unwrap_or(max), max);
            let l = 1.0 / (g * nf);
            (g, l, delta_lower(g, l), cl)
        }
        Regime::Th1 => {
            let (g, cl) = clip(inputs.gamma.unwrap_or(c.gamma_max_stochastic), c.gamma_max_stochastic);
            let l = 1.0 / (g * nf);
            if l > c.r2 / 2.0 * (1.0 + super::ADMISSIBILITY_SLACK) {
                return infeasible(format!("lambda = 1/(gamma n) = {l} exceeds R^2/2 = {}", c.r2 / 2.0));
            }
            (g, l, delta_lower(g, l), cl)
        }
        Regime::Th2 => {
            let (g, cl) = clip(inputs.gamma.unwrap_or(1.0 / c.l), 1.0 / c.l);
            (g, 0.0, 1.0, cl)
        }
        Regime::Cor2 => {
            let m2 = (nf + 1.0) * (nf + 1.0);
            let max = (1.0 - 1.0 / m2) / c.l;
            let (g, cl) = clip(inputs.gamma.unwrap_or(max), max);
            (g, 1.0 / (g * m2), 1.0 - 2.0 / (nf + 2.0), cl)
        }
        Regime::Th5 => {
            let r = need(inputs.r, "r", regime)?;
            let b = need(inputs.b, "b", regime)?;
            check_rb(r, b)?;
            let max = c.gamma_max_stochastic;
            let prescribed = inputs.gamma.unwrap_or(max * nf.powf((r - b) / (b + 1.0 - r)));
            let (g, cl) = clip(prescribed, max);
            let l = 1.0 / (g * nf);
            if g * (c.l + l) > 1.0 + super::ADMISSIBILITY_SLACK {
                return infeasible(format!("gamma*(L+lambda) = {} exceeds 1", g * (c.l + l)));
            }
            (g, l, delta_lower(g, l), cl)
        }
        Regime::Th6 => {
            let r = need(inputs.r, "r", regime)?;
            let b = need(inputs.b, "b", regime)?;
            check_rb(r, b)?;
            let m2 = nf * nf;
            let max = (1.0 - 1.0 / m2) / c.l;
            if max <= 0.0 {
                return infeasible("gamma*L + 1/n^2 <= 1 has no positive solution".into());
            }
            let prescribed = inputs.gamma.unwrap_or(nf.powf((-2.0 * b + 2.0 * r - 1.0) / (b + 1.0 - r)) / c.l);
            let (g, cl) = clip(prescribed, max);
            (g, 1.0 / (g * m2), 1.0 - 2.0 / (nf + 2.0), cl)
        }
    };
    let delta = if algorithm.is_accelerated() {
        if lambda == 0.0 {
            1.0
        } else {
            acc_delta
        }
    } else {
        0.0
    };
    Ok(DefaultParams {
        config: SolverConfig {
            algorithm,
            gamma,
            lambda,
            delta,
            momentum: super::MomentumSchedule::Constant,
            horizon: n,
            checkpoints: log_checkpoints(n, DEFAULT_POINTS_PER_DECADE),
            allow_invalid: false,
        },
        clipped,
    })
}
