//! Calculators for the upper bounds on E f(θ̄ₙ) − f(θ*).
//!
//! Every calculator checks the step-size constraints under which its bound is
//! proved and returns the total together with its named components.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, domain, Result};
use crate::linalg::{sum, trace_power_unchecked};
use crate::problems::{effective_constants, SpectralProblem};
use crate::solvers::ADMISSIBILITY_SLACK;

/// One evaluated bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    /// Identifier of the bound ("lemma1", "th2", ...).
    pub theorem: String,
    pub total: f64,
    /// Named additive components; they sum to `total`.
    pub components: Vec<(String, f64)>,
    /// (r, b) pair attaining the minimum, for bounds minimized over such pairs.
    pub argmin: Option<(f64, f64)>,
}

impl BoundValue {
    fn new(theorem: &str, components: Vec<(&str, f64)>) -> Self {
        Self {
            theorem: theorem.to_string(),
            total: sum(components.iter().map(|c| c.1)),
            components: components.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            argmin: None,
        }
    }

    /// Value of a named component.
    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|c| c.0 == name).map(|c| c.1)
    }
}

/// Lemma-1 variants for other assumptions on the start or the noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma1Variant {
    /// Bias bound needing only ‖θ₀ − θ*‖ to be finite.
    NormOnly,
    /// Variance bound for noise with arbitrary covariance V.
    Unstructured,
}

fn check_positive_n(n: usize) -> Result<f64> {
    if n == 0 {
        return domain("horizon n must be at least 1");
    }
    Ok(n as f64)
}

fn check_additive_step(p: &SpectralProblem, gamma: f64, lambda: f64) -> Result<()> {
    if !(gamma > 0.0 && lambda >= 0.0) {
        return domain(format!("need gamma > 0 and lambda >= 0, got gamma = {gamma}, lambda = {lambda}"));
    }
    let g = gamma * (p.l() + lambda);
    if g > 1.0 + ADMISSIBILITY_SLACK {
        return domain(format!("gamma*(L+lambda) = {g} exceeds 1"));
    }
    Ok(())
}

/// Σᵢ f(sᵢ, Δᵢ²) over the eigen-components of a problem.
fn spectral_sum(p: &SpectralProblem, f: impl Fn(f64, f64) -> f64) -> f64 {
    let d0 = p.delta0();
    sum(p.spectrum.values().iter().zip(d0.iter()).map(|(&s, &d)| f(s, d * d)))
}

/// ‖Σ^{1/2}(Σ+λ)⁻¹Δ₀‖².
fn ridge_bias_norm(p: &SpectralProblem, lambda: f64) -> f64 {
    spectral_sum(p, |s, d2| s * d2 / ((s + lambda) * (s + lambda)))
}

/// ‖Σ^{1/2}(Σ+λ)^{-1/2}Δ₀‖².
fn half_ridge_norm(p: &SpectralProblem, lambda: f64) -> f64 {
    spectral_sum(p, |s, d2| s * d2 / (s + lambda))
}

/// tr[Σ²(Σ+λ)⁻²], the degrees of freedom.
fn degrees_of_freedom(p: &SpectralProblem, lambda: f64) -> f64 {
    sum(p.spectrum.values().iter().map(|&s| s * s / ((s + lambda) * (s + lambda))))
}

/// Averaged SGD under the additive oracle:
/// (λ + 1/(γn))²‖Σ^{1/2}(Σ+λ)⁻¹Δ₀‖² + τ² tr[Σ²(Σ+λ)⁻²]/n.
pub fn bound_lemma1(p: &SpectralProblem, gamma: f64, lambda: f64, n: usize) -> Result<BoundValue> {
    check_additive_step(p, gamma, lambda)?;
    let nf = check_positive_n(n)?;
    let c = lambda + 1.0 / (gamma * nf);
    Ok(BoundValue::new(
        "lemma1",
        vec![("bias", c * c * ridge_bias_norm(p, lambda)), ("variance", p.tau2 * degrees_of_freedom(p, lambda) / nf)],
    ))
}

/// Lemma-1 variants.
///
/// `NormOnly` replaces the bias by 2(1/(γn) + λ)‖Σ^{1/2}(Σ+λ)^{-1/2}Δ₀‖².
/// `Unstructured` replaces the variance by γ tr[Σ(Σ+λ)⁻¹V] for a diagonal noise
/// covariance V (τ²Σ when `noise_diag` is `None`).
pub fn bound_lemma1_variants(
    p: &SpectralProblem,
    gamma: f64,
    lambda: f64,
    n: usize,
    variant: Lemma1Variant,
    noise_diag: Option<&[f64]>,
) -> Result<BoundValue> {
    let base = bound_lemma1(p, gamma, lambda, n)?;
    let nf = n as f64;
    let out = match variant {
        Lemma1Variant::NormOnly => BoundValue::new(
            "lemma1-norm-only",
            vec![
                ("bias", 2.0 * (1.0 / (gamma * nf) + lambda) * half_ridge_norm(p, lambda)),
                ("variance", base.component("variance").unwrap_or(0.0)),
            ],
        ),
        Lemma1Variant::Unstructured => {
            let s = p.spectrum.values();
            let v: Vec<f64> = match noise_diag {
                Some(v) => {
                    check_dim(p.dim(), v.len())?;
                    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                        return domain("noise covariance diagonal must be finite and non-negative");
                    }
                    v.to_vec()
                }
                None => s.iter().map(|si| p.tau2 * si).collect(),
            };
            let var = gamma * sum(s.iter().zip(&v).map(|(&si, &vi)| si * vi / (si + lambda)));
            BoundValue::new("lemma1-unstructured", vec![("bias", base.component("bias").unwrap_or(0.0)), ("variance", var)])
        }
    };
    Ok(out)
}

/// Averaged SGD under the least-mean-squares oracle, with its residual term.
pub fn bound_th1(p: &SpectralProblem, gamma: f64, lambda: f64, n: usize) -> Result<BoundValue> {
    let c = effective_constants(p);
    if !(gamma > 0.0 && lambda >= 0.0) {
        return domain("need gamma > 0 and lambda >= 0");
    }
    if gamma > c.gamma_max_stochastic * (1.0 + ADMISSIBILITY_SLACK) {
        return domain(format!("gamma = {gamma} exceeds 1/(2R^2) = {}", c.gamma_max_stochastic));
    }
    if lambda > c.r2 / 2.0 * (1.0 + ADMISSIBILITY_SLACK) {
        return domain(format!("lambda = {lambda} exceeds R^2/2 = {}", c.r2 / 2.0));
    }
    let nf = check_positive_n(n)?;
    let np1 = nf + 1.0;
    let k = 2.0 * lambda + 1.0 / (gamma * nf);
    let inv_half = spectral_sum(p, |s, d2| d2 / (s + lambda));
    let eff_dim = sum(p.spectrum.values().iter().map(|&s| s / (s + lambda)));
    Ok(BoundValue::new(
        "th1",
        vec![
            ("bias", 3.0 * k * k * ridge_bias_norm(p, lambda)),
            ("variance", 6.0 * p.sigma2 * degrees_of_freedom(p, lambda) / np1),
            ("residual", 3.0 * inv_half * eff_dim / (gamma * gamma * np1 * np1)),
        ],
    ))
}

/// Averaged accelerated SGD:
/// 2(λ + 36/(γ(n+1)²))‖Σ^{1/2}(Σ+λ)^{-1/2}Δ₀‖² + 8τ² tr[Σ²(Σ+λ)⁻²]/(n+1).
pub fn bound_th2(p: &SpectralProblem, gamma: f64, lambda: f64, n: usize) -> Result<BoundValue> {
    check_additive_step(p, gamma, lambda)?;
    let np1 = check_positive_n(n)? + 1.0;
    Ok(BoundValue::new(
        "th2",
        vec![
            ("bias", 2.0 * (lambda + 36.0 / (gamma * np1 * np1)) * half_ridge_norm(p, lambda)),
            ("variance", 8.0 * p.tau2 * degrees_of_freedom(p, lambda) / np1),
        ],
    ))
}

/// Averaged accelerated SGD with λ = 0 and δ = 1: 36‖Δ₀‖²/(γ(n+1)²) + 8τ²d/(n+1).
pub fn bound_cor1(p: &SpectralProblem, gamma: f64, n: usize) -> Result<BoundValue> {
    check_additive_step(p, gamma, 0.0)?;
    let np1 = check_positive_n(n)? + 1.0;
    Ok(BoundValue::new(
        "cor1",
        vec![("bias", 36.0 * p.delta0().norm_sq() / (gamma * np1 * np1)), ("variance", 8.0 * p.tau2 * p.dim() as f64 / np1)],
    ))
}

/// ‖Σ^{r/2}Δ₀‖² and tr Σᵇ of a problem.
fn source_quantities(p: &SpectralProblem, r: f64, b: f64) -> (f64, f64) {
    let norm_r = spectral_sum(p, |s, d2| if d2 == 0.0 { 0.0 } else { s.powf(r) * d2 });
    (norm_r, trace_power_unchecked(&p.spectrum, b))
}

fn check_pairs(pairs: &[(f64, f64)], r_range: (f64, f64)) -> Result<()> {
    if pairs.is_empty() {
        return domain("at least one (r, b) pair is required");
    }
    for &(r, b) in pairs {
        if !(r_range.0..=r_range.1).contains(&r) {
            return domain(format!("r = {r} outside [{}, {}]", r_range.0, r_range.1));
        }
        if !(0.0..=1.0).contains(&b) {
            return domain(format!("b = {b} outside [0, 1]"));
        }
    }
    Ok(())
}

/// Minimum over pairs of a two-component expression.
fn minimize(theorem: &str, pairs: &[(f64, f64)], eval: impl Fn(f64, f64) -> (f64, f64)) -> BoundValue {
    let mut best: Option<BoundValue> = None;
    for &(r, b) in pairs {
        let (bias, var) = eval(r, b);
        let mut v = BoundValue::new(theorem, vec![("bias", bias), ("variance", var)]);
        v.argmin = Some((r, b));
        // NaN totals never replace a finite candidate.
        if best.as_ref().is_none_or(|cur| v.total < cur.total || cur.total.is_nan()) {
            best = Some(v);
        }
    }
    best.expect("pairs is non-empty")
}

/// Averaged accelerated SGD, minimized over (r, b) ∈ [0, 1]²:
/// 2‖Σ^{r/2}Δ₀‖² λ^{−r}(36/(γ(n+1)²) + λ) + 8τ² tr Σᵇ λ^{−b}/(n+1).
pub fn bound_th3(p: &SpectralProblem, gamma: f64, lambda: f64, n: usize, pairs: &[(f64, f64)]) -> Result<BoundValue> {
    check_additive_step(p, gamma, lambda)?;
    check_pairs(pairs, (0.0, 1.0))?;
    let np1 = check_positive_n(n)? + 1.0;
    if lambda == 0.0 && pairs.iter().any(|&(r, b)| r > 0.0 || b > 0.0) {
        return domain("lambda = 0 only admits the pair (r, b) = (0, 0)");
    }
    Ok(minimize("th3", pairs, |r, b| {
        let (norm_r, trace_b) = source_quantities(p, r, b);
        (2.0 * norm_r * lambda.powf(-r) * (36.0 / (gamma * np1 * np1) + lambda), 8.0 * p.tau2 * trace_b * lambda.powf(-b) / np1)
    }))
}

/// Averaged accelerated SGD with λ = 1/(γ(n+1)²), minimized over (r, b) ∈ [0, 1]²:
/// 74‖Σ^{r/2}Δ₀‖²/(γ^{1−r}(n+1)^{2(1−r)}) + 8τ²γᵇ tr Σᵇ/(n+1)^{1−2b}.
pub fn bound_cor2(p: &SpectralProblem, gamma: f64, n: usize, pairs: &[(f64, f64)]) -> Result<BoundValue> {
    let np1 = check_positive_n(n)? + 1.0;
    check_additive_step(p, gamma, 1.0 / (gamma * np1 * np1))?;
    check_pairs(pairs, (0.0, 1.0))?;
    Ok(minimize("cor2", pairs, |r, b| {
        let (norm_r, trace_b) = source_quantities(p, r, b);
        (
            74.0 * norm_r / (gamma.powf(1.0 - r) * np1.powf(2.0 * (1.0 - r))),
            8.0 * p.tau2 * gamma.powf(b) * trace_b / np1.powf(1.0 - 2.0 * b),
        )
    }))
}

/// Averaged SGD with λ = 1/(γn), minimized over r ∈ [−1, 1], b ∈ [0, 1]:
/// (18 + Res)‖Σ^{r/2}Δ₀‖²/(γ^{1−r}(n+1)^{1−r}) + 6σ²γᵇ tr Σᵇ/(n+1)^{1−b},
/// with residual Res = 3γ^{1+b}nᵇ tr Σᵇ for r < 0 and Res = 0 for r ≥ 0.
pub fn bound_av_tighter(p: &SpectralProblem, gamma: f64, n: usize, pairs: &[(f64, f64)]) -> Result<BoundValue> {
    let nf = check_positive_n(n)?;
    let np1 = nf + 1.0;
    if !gamma.is_finite() || gamma <= 0.0 {
        return domain("need gamma > 0");
    }
    check_pairs(pairs, (-1.0, 1.0))?;
    Ok(minimize("av-tighter", pairs, |r, b| {
        let (norm_r, trace_b) = source_quantities(p, r, b);
        let res = residual_av_tighter(gamma, nf, r, b, trace_b);
        ((18.0 + res) * norm_r / (gamma.powf(1.0 - r) * np1.powf(1.0 - r)), 6.0 * p.sigma2 * gamma.powf(b) * trace_b / np1.powf(1.0 - b))
    }))
}

/// Residual factor of [`bound_av_tighter`].
pub fn residual_av_tighter(gamma: f64, n: f64, r: f64, b: f64, trace_b: f64) -> f64 {
    if r < 0.0 {
        3.0 * gamma.powf(1.0 + b) * n.powf(b) * trace_b
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{EigenVector, Spectrum};

    fn scalar(s: f64, delta: f64, tau2: f64, sigma2: f64) -> SpectralProblem {
        SpectralProblem::new("s", 0, Spectrum::new(vec![s]).unwrap(), EigenVector::zeros(1), vec![delta].into(), sigma2, tau2, 3.0).unwrap()
    }

    #[test]
    fn lemma1_example() {
        let b = bound_lemma1(&scalar(1.0, 1.0, 1.0, 0.0), 1.0, 0.0, 10).unwrap();
        assert!((b.component("bias").unwrap() - 0.01).abs() < 1e-15);
        assert!((b.component("variance").unwrap() - 0.1).abs() < 1e-15);
        assert!((b.total - 0.11).abs() < 1e-15);
        assert!(bound_lemma1(&scalar(1.0, 1.0, 1.0, 0.0), 1.5, 0.0, 10).is_err());
    }

    #[test]
    fn lemma1_ridge_limit() {
        // γ(L+λ) ≤ 1 forces γ ≤ 1/(1+λ); the bias tends to λ²‖Σ^{1/2}(Σ+λ)⁻¹Δ‖² → sΔ².
        let p = scalar(0.5, 2.0, 0.0, 0.0);
        let lambda = 1e6;
        let gamma = 1.0 / (0.5 + lambda);
        let b = bound_lemma1(&p, gamma, lambda, 1_000_000_000).unwrap();
        let asym = lambda * lambda * 0.5 * 4.0 / ((0.5 + lambda) * (0.5 + lambda));
        assert!((b.component("bias").unwrap() / asym - 1.0).abs() < 1e-6);
        assert!((asym - 2.0).abs() < 1e-5);
    }

    #[test]
    fn cor1_example_and_th2_relation() {
        let p = scalar(1.0, 1.0, 0.0, 0.0);
        let c = bound_cor1(&p, 1.0, 9).unwrap();
        assert!((c.total - 0.36).abs() < 1e-15);
        let t = bound_th2(&p, 1.0, 0.0, 9).unwrap();
        assert!((t.component("bias").unwrap() - 2.0 * c.component("bias").unwrap()).abs() < 1e-15);
    }

    #[test]
    fn unstructured_variant_substitution() {
        let p = crate::problems::make_random_problem(5, 3).unwrap();
        let gamma = 0.5 / p.l();
        let b = bound_lemma1_variants(&p, gamma, 0.0, 100, Lemma1Variant::Unstructured, None).unwrap();
        assert!((b.component("variance").unwrap() - gamma * p.tau2 * p.spectrum.trace()).abs() < 1e-14);
    }

    #[test]
    fn norm_only_at_balanced_lambda() {
        let p = crate::problems::make_random_problem(5, 4).unwrap();
        let (n, gamma) = (100usize, 0.5 / p.l());
        let lambda = 1.0 / (gamma * n as f64);
        let b = bound_lemma1_variants(&p, gamma, lambda, n, Lemma1Variant::NormOnly, None).unwrap();
        let expect = 4.0 / (gamma * n as f64) * half_ridge_norm(&p, lambda);
        assert!((b.component("bias").unwrap() / expect - 1.0).abs() < 1e-14);
    }

    #[test]
    fn th1_scalar_hand_evaluation() {
        // s = 1, κ = 3 gives R² = 3; γ = 1/6, λ = 0.5, n = 4, Δ = 1, σ² = 2.
        let p = scalar(1.0, 1.0, 0.0, 2.0);
        let b = bound_th1(&p, 1.0 / 6.0, 0.5, 4).unwrap();
        let k: f64 = 1.0 + 1.5;
        let bias = 3.0 * k * k * (1.0 / 2.25);
        let var = 6.0 * 2.0 * (1.0 / 2.25) / 5.0;
        let res = 3.0 * (1.0 / 1.5) * (1.0 / 1.5) * 36.0 / 25.0;
        assert!((b.component("bias").unwrap() - bias).abs() < 1e-13);
        assert!((b.component("variance").unwrap() - var).abs() < 1e-13);
        assert!((b.component("residual").unwrap() - res).abs() < 1e-13);
        let small = bound_th1(&p, 1.0 / 60.0, 0.5, 4).unwrap();
        assert!(small.component("residual").unwrap() > 99.0 * b.component("residual").unwrap());
        assert!(bound_th1(&p, 0.2, 0.5, 4).is_err());
        assert!(bound_th1(&p, 0.1, 2.0, 4).is_err());
    }

    #[test]
    fn cor2_at_origin_recovers_cor1_structure() {
        let p = crate::problems::make_random_problem(4, 9).unwrap();
        let (gamma, n) = (0.9 / p.l(), 50usize);
        let b = bound_cor2(&p, gamma, n, &[(0.0, 0.0)]).unwrap();
        let np1 = 51.0;
        assert!((b.component("bias").unwrap() - 74.0 * p.delta0().norm_sq() / (gamma * np1 * np1)).abs() < 1e-12);
        assert!((b.component("variance").unwrap() - 8.0 * p.tau2 * 4.0 / np1).abs() < 1e-12);
    }

    #[test]
    fn min_over_pairs() {
        let p = crate::problems::make_random_problem(6, 1).unwrap();
        let (gamma, lambda, n) = (0.5 / p.l(), 0.01, 200usize);
        let pairs = [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (0.2, 0.8)];
        let all = bound_th3(&p, gamma, lambda, n, &pairs).unwrap();
        for pair in pairs {
            assert!(all.total <= bound_th3(&p, gamma, lambda, n, &[pair]).unwrap().total);
        }
        let sub = bound_th3(&p, gamma, lambda, n, &pairs[..2]).unwrap();
        assert!(all.total <= sub.total);
        assert!(bound_th3(&p, gamma, lambda, n, &[(-0.5, 0.0)]).is_err());
    }

    #[test]
    fn residual_sign_convention() {
        assert_eq!(residual_av_tighter(0.1, 100.0, 0.0, 0.5, 2.0), 0.0);
        assert_eq!(residual_av_tighter(0.1, 100.0, 0.7, 0.5, 2.0), 0.0);
        let r = residual_av_tighter(0.1, 100.0, -0.5, 0.5, 2.0);
        assert!((r - 3.0 * 0.1f64.powf(1.5) * 10.0 * 2.0).abs() < 1e-14);
    }
}
