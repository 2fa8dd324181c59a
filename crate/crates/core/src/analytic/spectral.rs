//! Exact risk from closed forms of the impulse response.
//!
//! With complex roots ρe^{±iω} of z² − (1+δ)Tz + δT, the shifted response
//! yₖ = xₖ − δT xₖ₋₁ (which satisfies y₀ = y₋₁ = 1) is yₖ = β ρᵏ sin(kω + ψ) with
//! β = √a / sin ω and ψ = atan2(sin ω, cos ω − ρ), and uₖ = (1 − yₖ)/a because
//! 1 − 2ρ cos ω + ρ² = a. With a double root r the response is
//! yₖ = rᵏ(1 + k(1 − r)) and a = (1 − r)². Sums of yₘ and yₘ² then have
//! geometric closed forms, so each (component, checkpoint) pair costs O(1).

use super::{check_checkpoints, AnalyticResult, Component, RowAccumulator, TransferSystem};
use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;
use crate::problems::SpectralProblem;
use crate::solvers::SolverConfig;

/// A component is treated as coalescent when |disc| < threshold · (1 + tr F²).
pub const COALESCENCE_THRESHOLD: f64 = 1e-9;

/// Nature of the roots of a component's transfer matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootClass {
    /// Complex pair ρe^{±iω}.
    Complex { rho: f64, omega: f64 },
    /// Double real root r.
    Coalescent { r: f64 },
    /// Two distinct real roots, not covered by the closed forms.
    RealDistinct,
}

/// Discriminant tr F² − 4 det F of the component's transfer matrix.
pub fn discriminant(t: f64, delta: f64) -> f64 {
    let tr = (1.0 + delta) * t;
    tr * tr - 4.0 * delta * t
}

/// Classifies the roots of one component.
pub fn classify(t: f64, delta: f64) -> RootClass {
    let tr = (1.0 + delta) * t;
    let disc = discriminant(t, delta);
    if disc.abs() < COALESCENCE_THRESHOLD * (1.0 + tr * tr) {
        RootClass::Coalescent { r: 0.5 * tr }
    } else if disc < 0.0 {
        let rho = (delta * t).sqrt();
        let cos_w = tr / (2.0 * rho);
        let sin_w = (-disc).sqrt() / (2.0 * rho);
        RootClass::Complex { rho, omega: sin_w.atan2(cos_w) }
    } else {
        RootClass::RealDistinct
    }
}

/// Σ_{m=0}^{N−1} qᵐ cos(mθ + φ) for 0 ≤ q < 1.
fn damped_cos_sum(n: f64, q: f64, theta: f64, phi: f64) -> f64 {
    let qn = q.powf(n);
    let num = phi.cos() - q * (phi - theta).cos() - qn * (n * theta + phi).cos() + qn * q * ((n - 1.0) * theta + phi).cos();
    num / (1.0 - 2.0 * q * theta.cos() + q * q)
}

/// Below this value of n(1 − q) the closed-form power sums lose digits to
/// cancellation and are replaced by direct summation.
const DIRECT_SUM_LIMIT: f64 = 8.0;

/// Σ_{m=1}^{n} mᵖ qᵐ by direct summation, for p = 0, 1, 2.
fn direct_power_sum(n: f64, q: f64, p: i32) -> f64 {
    let mut acc = CompensatedSum::default();
    let mut qm = 1.0;
    for m in 1..=(n as u64) {
        qm *= q;
        acc.add((m as f64).powi(p) * qm);
    }
    acc.value()
}

/// Σ_{m=1}^{n} qᵐ.
fn s0(n: f64, q: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else if n * (1.0 - q) < DIRECT_SUM_LIMIT {
        direct_power_sum(n, q, 0)
    } else {
        q * (1.0 - q.powf(n)) / (1.0 - q)
    }
}

/// Σ_{m=1}^{n} m qᵐ.
fn s1(n: f64, q: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    if n * (1.0 - q) < DIRECT_SUM_LIMIT {
        return direct_power_sum(n, q, 1);
    }
    let qn = q.powf(n);
    q * (1.0 - (n + 1.0) * qn + n * qn * q) / ((1.0 - q) * (1.0 - q))
}

/// Σ_{m=1}^{n} m² qᵐ.
fn s2(n: f64, q: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    if n * (1.0 - q) < DIRECT_SUM_LIMIT {
        return direct_power_sum(n, q, 2);
    }
    let qn = q.powf(n);
    let num = 1.0 + q - (n + 1.0) * (n + 1.0) * qn + (2.0 * n * n + 2.0 * n - 1.0) * qn * q - n * n * qn * q * q;
    q * num / ((1.0 - q) * (1.0 - q) * (1.0 - q))
}

/// Returns (uₙ₊₁ − δT uₙ, Σ_{m=1}^{n} uₘ²) for one component at horizon n.
fn component_sums(c: &Component, delta: f64, n: usize) -> Result<(f64, f64)> {
    let nf = n as f64;
    match classify(c.t, delta) {
        RootClass::Complex { rho, omega } => {
            let a = c.a;
            let sin_w = omega.sin();
            let psi = sin_w.atan2(omega.cos() - rho);
            let beta = a.sqrt() / sin_w;
            let y = |k: f64| beta * rho.powf(k) * (k * omega + psi).sin();
            let q = rho * rho;
            let u = |k: f64| (1.0 - y(k)) / a;
            let w = u(nf + 1.0) - q * u(nf);
            let sum_y = w - 1.0;
            let sum_y2 = 0.5 * beta * beta * (s0(nf, q) - q * damped_cos_sum(nf, q, 2.0 * omega, 2.0 * (psi + omega)));
            Ok((w, (nf - 2.0 * sum_y + sum_y2) / (a * a)))
        }
        RootClass::Coalescent { r } => {
            let eps = 1.0 - r;
            let a = eps * eps;
            let y = |k: f64| r.powf(k) * (1.0 + k * eps);
            let u = |k: f64| (1.0 - y(k)) / a;
            let q = r * r;
            let w = u(nf + 1.0) - q * u(nf);
            let sum_y = w - 1.0;
            let sum_y2 = s0(nf, q) + 2.0 * eps * s1(nf, q) + eps * eps * s2(nf, q);
            Ok((w, (nf - 2.0 * sum_y + sum_y2) / (a * a)))
        }
        RootClass::RealDistinct => Err(Error::UnsupportedRegime(format!(
            "component with s = {} has two distinct real roots (delta = {delta} below the admissible range)",
            c.s
        ))),
    }
}

/// Exact E f(θ̄ₙ) − f(θ*) of the accelerated recursion from closed forms.
///
/// Errors with [`Error::UnsupportedRegime`] when some component has distinct real
/// roots, which happens for momentum below the admissible range and for δ = 0.
pub fn exact_acc_risk_spectral(problem: &SpectralProblem, cfg: &SolverConfig, checkpoints: &[usize]) -> Result<AnalyticResult> {
    check_checkpoints(checkpoints)?;
    let sys = TransferSystem::new(problem, cfg)?;
    let mut acc = RowAccumulator::new(checkpoints.len());
    for c in &sys.components {
        for (idx, &n) in checkpoints.iter().enumerate() {
            let (w, var) = component_sums(c, sys.delta, n)?;
            let np1 = (n + 1) as f64;
            acc.add(idx, c, sys.gamma, c.delta_tilde * w / np1, var, np1);
        }
    }
    Ok(acc.finish("spectral", checkpoints))
}
