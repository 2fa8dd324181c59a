//! Predicted convergence exponents in the non-parametric regime.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Predicted behaviour of E f(θ̄ₙ) − f(θ*) ∝ n^{exponent}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    /// Exponent expected with the prescribed tuning (optimal when valid, saturated otherwise).
    pub exponent: f64,
    /// The optimal exponent −(1−r)/(b+1−r).
    pub optimal_exponent: f64,
    /// Exponent of the prescribed step-size γ ∝ n^{gamma_exponent}.
    pub gamma_exponent: f64,
    /// Whether the optimal rate is attained for this (r, b).
    pub valid: bool,
}

fn check(r: f64, b: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&r) {
        return domain(format!("r = {r} outside [-1, 1]"));
    }
    if !(b > 0.0 && b <= 1.0) {
        return domain(format!("b = {b} outside (0, 1]"));
    }
    Ok(())
}

fn optimal(r: f64, b: f64) -> f64 {
    -(1.0 - r) / (b + 1.0 - r)
}

/// Averaged SGD with λ = 1/(γn): optimal for r ≤ b; beyond, γ saturates at its
/// maximum and the bias decays as n^{−(1−r)}.
pub fn rate_th5(r: f64, b: f64) -> Result<RatePrediction> {
    check(r, b)?;
    let valid = r <= b;
    Ok(RatePrediction {
        exponent: if valid { optimal(r, b) } else { -(1.0 - r) },
        optimal_exponent: optimal(r, b),
        gamma_exponent: (r - b) / (b + 1.0 - r),
        valid,
    })
}

/// Averaged accelerated SGD with λ = 1/(γn²): optimal for r ≤ b + 1/2; beyond,
/// γ saturates and the bias decays as n^{−2(1−r)}.
pub fn rate_th6(r: f64, b: f64) -> Result<RatePrediction> {
    check(r, b)?;
    let valid = r <= b + 0.5;
    Ok(RatePrediction {
        exponent: if valid { optimal(r, b) } else { -2.0 * (1.0 - r) },
        optimal_exponent: optimal(r, b),
        gamma_exponent: (-2.0 * b + 2.0 * r - 1.0) / (b + 1.0 - r),
        valid,
    })
}
