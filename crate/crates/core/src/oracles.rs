//! Stochastic first-order oracles for the least-squares objective.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, domain, Result};
use crate::linalg::{dot, quad_form, EigenVector};
use crate::problems::SpectralProblem;
use crate::rng::{normal, stream, SimRng};

/// One sample (x, y) of the well-specified linear model, x in eigen-coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: EigenVector,
    pub y: f64,
}

/// Which stochastic gradient the solver receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Σθ − y x: exact population covariance, sampled cross term.
    AdditiveSampled,
    /// Σ(θ − θ*) − ξ with ξ ~ N(0, τ²Σ).
    AdditiveGaussian,
    /// (⟨x, θ⟩ − y) x, the least-mean-squares gradient.
    Multiplicative,
}

impl OracleKind {
    pub const ALL: [OracleKind; 3] = [Self::AdditiveSampled, Self::AdditiveGaussian, Self::Multiplicative];

    pub fn name(self) -> &'static str {
        match self {
            Self::AdditiveSampled => "additive-sampled",
            Self::AdditiveGaussian => "additive-gaussian",
            Self::Multiplicative => "multiplicative",
        }
    }

    pub fn is_additive(self) -> bool {
        !matches!(self, Self::Multiplicative)
    }
}

impl std::fmt::Display for OracleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OracleKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).map_or_else(|| domain(format!("unknown oracle {s:?}")), Ok)
    }
}

/// Source of stochastic gradients at points given in eigen-coordinates.
///
/// Implementations own their randomness so that a run is a pure function of
/// the oracle's initial state.
pub trait GradientOracle {
    /// Writes the gradient at `point` into `out` (both of problem dimension).
    fn gradient(&mut self, point: &[f64], out: &mut [f64]);
}

/// Draws x with independent N(0, sᵢ) coordinates and y = ⟨θ*, x⟩ + ε, ε ~ N(0, σ²).
pub fn sample_observation(p: &SpectralProblem, rng: &mut SimRng) -> Observation {
    let mut x = vec![0.0; p.dim()];
    let y = sample_into(p, rng, &mut x);
    Observation { x: x.into(), y }
}

fn sample_into(p: &SpectralProblem, rng: &mut SimRng, x: &mut [f64]) -> f64 {
    for (xi, si) in x.iter_mut().zip(p.spectrum.values()) {
        *xi = si.sqrt() * normal(rng);
    }
    let noise = if p.sigma2 > 0.0 { p.sigma2.sqrt() * normal(rng) } else { 0.0 };
    dot(&p.theta_star, x) + noise
}

/// Σθ − y x.
pub fn additive_gradient(theta: &[f64], obs: &Observation, p: &SpectralProblem) -> Result<EigenVector> {
    check_dim(p.dim(), theta.len())?;
    check_dim(p.dim(), obs.x.dim())?;
    Ok(p.spectrum.values().iter().zip(theta).zip(obs.x.iter()).map(|((s, t), x)| s * t - obs.y * x).collect::<Vec<_>>().into())
}

/// Σ(θ − θ*) − ξ with ξᵢ ~ N(0, τ² sᵢ) drawn from `rng`.
pub fn additive_gaussian_gradient(theta: &[f64], p: &SpectralProblem, rng: &mut SimRng) -> Result<EigenVector> {
    check_dim(p.dim(), theta.len())?;
    let mut out = vec![0.0; p.dim()];
    gaussian_into(theta, p, rng, &mut out);
    Ok(out.into())
}

fn gaussian_into(theta: &[f64], p: &SpectralProblem, rng: &mut SimRng, out: &mut [f64]) {
    let tau = p.tau2.sqrt();
    for (((o, s), t), ts) in out.iter_mut().zip(p.spectrum.values()).zip(theta).zip(p.theta_star.iter()) {
        let xi = if tau > 0.0 { tau * s.sqrt() * normal(rng) } else { 0.0 };
        *o = s * (t - ts) - xi;
    }
}

/// (⟨x, θ⟩ − y) x.
pub fn stochastic_gradient(theta: &[f64], obs: &Observation) -> Result<EigenVector> {
    check_dim(obs.x.dim(), theta.len())?;
    let resid = dot(&obs.x, theta) - obs.y;
    Ok(obs.x.iter().map(|x| resid * x).collect::<Vec<_>>().into())
}

/// The three oracles driven by one seeded stream.
pub struct SampledOracle<'a> {
    kind: OracleKind,
    problem: &'a SpectralProblem,
    rng: SimRng,
    x: Vec<f64>,
}

impl<'a> SampledOracle<'a> {
    pub fn new(kind: OracleKind, problem: &'a SpectralProblem, seed: u64) -> Self {
        Self { kind, problem, rng: stream(seed), x: vec![0.0; problem.dim()] }
    }
}

impl GradientOracle for SampledOracle<'_> {
    fn gradient(&mut self, point: &[f64], out: &mut [f64]) {
        let p = self.problem;
        match self.kind {
            OracleKind::AdditiveGaussian => gaussian_into(point, p, &mut self.rng, out),
            OracleKind::AdditiveSampled => {
                let y = sample_into(p, &mut self.rng, &mut self.x);
                for (((o, s), t), x) in out.iter_mut().zip(p.spectrum.values()).zip(point).zip(&self.x) {
                    *o = s * t - y * x;
                }
            }
            OracleKind::Multiplicative => {
                let y = sample_into(p, &mut self.rng, &mut self.x);
                let resid = dot(&self.x, point) - y;
                for (o, x) in out.iter_mut().zip(&self.x) {
                    *o = resid * x;
                }
            }
        }
    }
}

/// Population noise level of the sampled additive oracle under Gaussian inputs:
/// the smallest c with E[ξ⊗ξ] ≼ cΣ, equal to σ² + 2‖Σ^{1/2}θ*‖².
pub fn additive_sampled_tau2(p: &SpectralProblem) -> f64 {
    p.sigma2 + 2.0 * quad_form(&p.theta_star, &p.spectrum, 1.0).expect("problem dimensions are validated")
}

/// Monte Carlo estimate of the same constant on a probe set made of the
/// eigen-directions and the normalized Σ^{1/2}θ* direction (which attains it).
pub fn estimate_additive_sampled_tau2(p: &SpectralProblem, samples: usize, seed: u64) -> Result<f64> {
    if samples < 100 {
        return domain("at least 100 samples are required");
    }
    let d = p.dim();
    let s = p.spectrum.values();
    let mut probes: Vec<Vec<f64>> = (0..d.min(5))
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect();
    let st: Vec<f64> = s.iter().zip(p.theta_star.iter()).map(|(si, t)| si.sqrt() * t).collect();
    if st.iter().any(|v| *v != 0.0) {
        // z = Σ^{-1/2} u with u ∝ Σ^{1/2}θ* maximizes the ratio.
        probes.push(p.theta_star.to_vec());
    }
    let mean: Vec<f64> = s.iter().zip(p.theta_star.iter()).map(|(si, t)| si * t).collect();
    let mut rng = stream(seed);
    let mut x = vec![0.0; d];
    let mut second = vec![0.0; probes.len()];
    for _ in 0..samples {
        let y = sample_into(p, &mut rng, &mut x);
        for (acc, z) in second.iter_mut().zip(&probes) {
            let proj: f64 = z.iter().zip(&x).zip(&mean).map(|((zi, xi), mi)| zi * (y * xi - mi)).sum();
            *acc += proj * proj;
        }
    }
    Ok(probes
        .iter()
        .zip(&second)
        .map(|(z, m)| m / samples as f64 / z.iter().zip(s).map(|(zi, si)| si * zi * zi).sum::<f64>())
        .fold(0.0, f64::max))
}
