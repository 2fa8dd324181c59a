//! Synthetic least-squares problems described in the eigenbasis of Σ.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, domain, Error, Result};
use crate::linalg::{quad_form, sum, trace_power, EigenVector, Spectrum};
use crate::rng::{normal, stream, SimRng};

/// Format tag written into every problem document.
pub const PROBLEM_FORMAT: &str = "lsq-accel/problem";
/// Current problem document version.
pub const PROBLEM_VERSION: u32 = 1;

/// Exponent offset ε in the source-condition displacement Δᵢ² = sᵢ^{−r} i^{−1−ε}.
pub const SOURCE_EPSILON: f64 = 0.01;

/// A seeded orthogonal change of basis Q. Ambient coordinates are Q times
/// eigen-coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub seed: u64,
    /// Row-major d×d orthogonal matrix.
    pub matrix: Vec<f64>,
}

impl Rotation {
    /// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.
    pub fn random(d: usize, seed: u64) -> Self {
        let mut rng = stream(seed);
        let g = DMatrix::from_fn(d, d, |_, _| normal(&mut rng));
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        // Fixing the signs of R's diagonal makes the distribution exactly Haar.
        for j in 0..d {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        let mut matrix = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                matrix.push(q[(i, j)]);
            }
        }
        Self { seed, matrix }
    }

    pub fn dim(&self) -> usize {
        (self.matrix.len() as f64).sqrt().round() as usize
    }

    /// out = Q v (eigen-coordinates to ambient).
    pub fn to_ambient(&self, v: &[f64], out: &mut [f64]) {
        let d = v.len();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.matrix[i * d..(i + 1) * d];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// out = Qᵀ v (ambient to eigen-coordinates).
    pub fn to_eigen(&self, v: &[f64], out: &mut [f64]) {
        let d = v.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            let row = &self.matrix[i * d..(i + 1) * d];
            for (o, q) in out.iter_mut().zip(row) {
                *o += q * vi;
            }
        }
    }
}

/// A quadratic objective given by the spectrum of Σ, the optimum, the start and
/// the noise constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProblem {
    pub id: String,
    pub seed: u64,
    pub spectrum: Spectrum,
    pub theta_star: EigenVector,
    pub theta0: EigenVector,
    /// Residual variance σ² of the observation model.
    pub sigma2: f64,
    /// Noise scale τ² of the additive oracle, E[ξ⊗ξ] ≼ τ²Σ.
    pub tau2: f64,
    /// Fourth-moment constant κ of the inputs (3 for Gaussian inputs).
    pub kurtosis: f64,
    /// Optional change of basis used to demonstrate basis independence.
    #[serde(default)]
    pub rotation: Option<Rotation>,
}

impl SpectralProblem {
    /// Builds and validates a problem.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        seed: u64,
        spectrum: Spectrum,
        theta_star: EigenVector,
        theta0: EigenVector,
        sigma2: f64,
        tau2: f64,
        kurtosis: f64,
    ) -> Result<Self> {
        let p = Self { id: id.into(), seed, spectrum, theta_star, theta0, sigma2, tau2, kurtosis, rotation: None };
        p.validate()?;
        Ok(p)
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let d = self.spectrum.dim();
        check_dim(d, self.theta_star.dim())?;
        check_dim(d, self.theta0.dim())?;
        if !self.theta_star.is_finite() || !self.theta0.is_finite() {
            return domain("theta_star and theta0 must be finite");
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return domain(format!("sigma2 = {} must be finite and non-negative", self.sigma2));
        }
        if !(self.tau2.is_finite() && self.tau2 >= 0.0) {
            return domain(format!("tau2 = {} must be finite and non-negative", self.tau2));
        }
        if !(self.kurtosis.is_finite() && self.kurtosis >= 1.0) {
            return domain(format!("kurtosis = {} must be at least 1", self.kurtosis));
        }
        if let Some(rot) = &self.rotation {
            check_dim(d * d, rot.matrix.len())?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// Initial displacement Δ₀ = θ₀ − θ*.
    pub fn delta0(&self) -> EigenVector {
        EigenVector(self.theta0.iter().zip(self.theta_star.iter()).map(|(a, b)| a - b).collect())
    }

    /// Radius R² = κ tr Σ.
    pub fn r2(&self) -> f64 {
        self.kurtosis * self.spectrum.trace()
    }

    /// Largest eigenvalue L.
    pub fn l(&self) -> f64 {
        self.spectrum.largest()
    }

    /// Returns a copy with different noise constants.
    pub fn with_noise(mut self, sigma2: f64, tau2: f64) -> Result<Self> {
        self.sigma2 = sigma2;
        self.tau2 = tau2;
        self.validate()?;
        Ok(self)
    }

    /// Returns a copy whose initial displacement is rescaled by `factor` (0 starts at θ*).
    pub fn with_displacement_scale(mut self, factor: f64) -> Self {
        let delta = self.delta0();
        for ((t0, ts), dl) in self.theta0.iter_mut().zip(self.theta_star.iter()).zip(delta.iter()) {
            *t0 = ts + factor * dl;
        }
        self
    }

    /// Returns a copy carrying a seeded random rotation.
    pub fn with_rotation(mut self, seed: u64) -> Self {
        self.rotation = Some(Rotation::random(self.dim(), seed));
        self
    }

    /// Serializes to the versioned JSON document.
    pub fn to_json(&self) -> Result<String> {
        let doc = ProblemDocument {
            format: PROBLEM_FORMAT.to_string(),
            version: PROBLEM_VERSION,
            constants: effective_constants(self),
            problem: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses a versioned JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProblemDocument = serde_json::from_str(text)?;
        if doc.format != PROBLEM_FORMAT {
            return Err(Error::Format(format!("unexpected format tag {:?}", doc.format)));
        }
        if doc.version != PROBLEM_VERSION {
            return Err(Error::Format(format!("unsupported problem version {}", doc.version)));
        }
        doc.problem.validate()?;
        Ok(doc.problem)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk representation of a problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDocument {
    pub format: String,
    pub version: u32,
    pub problem: SpectralProblem,
    /// Derived constants, written for convenience and ignored on read.
    pub constants: EffectiveConstants,
}

/// Regularity of the optimum and capacity of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceCondition {
    pub r: f64,
    pub b: f64,
    /// ‖Σ^{r/2}(θ₀ − θ*)‖².
    pub norm_r: f64,
    /// tr Σᵇ.
    pub trace_b: f64,
}

impl SourceCondition {
    /// Evaluates both quantities on a problem.
    pub fn of(problem: &SpectralProblem, r: f64, b: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&r) {
            return domain(format!("source exponent r = {r} must lie in [-1, 1]"));
        }
        if !(b > 0.0 && b <= 1.0) {
            return domain(format!("capacity exponent b = {b} must lie in (0, 1]"));
        }
        Ok(Self { r, b, norm_r: quad_form(&problem.delta0(), &problem.spectrum, r)?, trace_b: trace_power(&problem.spectrum, b)? })
    }
}

/// Constants entering the step-size constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConstants {
    /// R² = κ tr Σ.
    pub r2: f64,
    /// Largest eigenvalue.
    pub l: f64,
    /// 1/L, the additive-oracle step limit at λ = 0.
    pub gamma_max_additive: f64,
    /// 1/(2R²), the multiplicative-oracle step limit.
    pub gamma_max_stochastic: f64,
}

impl EffectiveConstants {
    /// Largest admissible additive-oracle step for regularization λ.
    pub fn gamma_max_additive_at(&self, lambda: f64) -> f64 {
        1.0 / (self.l + lambda)
    }
}

pub fn effective_constants(p: &SpectralProblem) -> EffectiveConstants {
    let r2 = p.r2();
    let l = p.l();
    EffectiveConstants { r2, l, gamma_max_additive: 1.0 / l, gamma_max_stochastic: 1.0 / (2.0 * r2) }
}

fn unit_gaussian_direction(rng: &mut SimRng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
        let norm = sum(v.iter().map(|x| x * x)).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// The synthetic problem of the Figure 1 experiments: sᵢ = 1/i³, a random unit
/// displacement, σ² = τ² = 1 and Gaussian inputs.
pub fn make_fig1_problem(d: usize, seed: u64) -> Result<SpectralProblem> {
    if d < 1 {
        return domain("dimension must be at least 1");
    }
    let spectrum = Spectrum::new((1..=d).map(|i| 1.0 / (i as f64).powi(3)).collect())?;
    let mut rng = stream(seed);
    let theta_star = unit_gaussian_direction(&mut rng, d);
    let dir = unit_gaussian_direction(&mut rng, d);
    let theta0: Vec<f64> = theta_star.iter().zip(&dir).map(|(a, b)| a + b).collect();
    SpectralProblem::new(format!("fig1-d{d}-s{seed}"), seed, spectrum, theta_star.into(), theta0.into(), 1.0, 1.0, 3.0)
}

/// Problem with capacity exponent b and source exponent r: sᵢ = i^{−1/b} and
/// Δᵢ² = sᵢ^{−r} i^{−1−ε} with random signs. The start is θ₀ = 0.
pub fn make_source_problem(d: usize, b: f64, r: f64, seed: u64) -> Result<(SpectralProblem, SourceCondition)> {
    if d < 1 {
        return domain("dimension must be at least 1");
    }
    if !(b > 0.0 && b <= 1.0) {
        return domain(format!("capacity exponent b = {b} must lie in (0, 1]"));
    }
    if !(-1.0..=1.0).contains(&r) {
        return domain(format!("source exponent r = {r} must lie in [-1, 1]"));
    }
    let mut rng = stream(seed);
    let mut s = Vec::with_capacity(d);
    let mut theta_star = Vec::with_capacity(d);
    for i in 1..=d {
        let fi = i as f64;
        let si = fi.powf(-1.0 / b);
        let mag = (si.powf(-r) * fi.powf(-1.0 - SOURCE_EPSILON)).sqrt();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        s.push(si);
        // θ₀ = 0, so θ* = −Δ.
        theta_star.push(-sign * mag);
    }
    let p = SpectralProblem::new(
        format!("source-b{b}-r{r}-d{d}-s{seed}"),
        seed,
        Spectrum::new(s)?,
        theta_star.into(),
        EigenVector::zeros(d),
        1.0,
        1.0,
        3.0,
    )?;
    let sc = SourceCondition::of(&p, r, b)?;
    Ok((p, sc))
}

/// Upper bound on the initial-risk mass Σ_{i>d} sᵢΔᵢ² discarded by truncating a
/// source problem at dimension d (integral comparison for a decreasing summand).
pub fn truncation_tail(b: f64, r: f64, d: usize) -> f64 {
    let p = (1.0 - r) / b + 1.0 + SOURCE_EPSILON;
    (d as f64).powf(1.0 - p) / (p - 1.0)
}

/// Smallest d whose truncation tail is below `allowed`.
pub fn required_dimension(b: f64, r: f64, allowed: f64) -> usize {
    let p = (1.0 - r) / b + 1.0 + SOURCE_EPSILON;
    let d = (allowed * (p - 1.0)).powf(1.0 / (1.0 - p));
    if d.is_finite() {
        d.ceil().max(1.0) as usize
    } else {
        usize::MAX
    }
}

/// Checks the truncation rule: tail < fraction × smallest measured risk.
pub fn check_truncation(b: f64, r: f64, d: usize, smallest_risk: f64, fraction: f64) -> Result<()> {
    let tail = truncation_tail(b, r, d);
    let allowed = fraction * smallest_risk;
    if tail < allowed {
        Ok(())
    } else {
        Err(Error::Truncation { tail, allowed, required_d: required_dimension(b, r, allowed) })
    }
}

/// A random problem for property and dominance tests: log-uniform spectrum in
/// [1e−3, 1], random displacement of norm in [0.2, 2], random noise levels.
pub fn make_random_problem(d: usize, seed: u64) -> Result<SpectralProblem> {
    if d < 1 {
        return domain("dimension must be at least 1");
    }
    let mut rng = stream(seed);
    let mut s: Vec<f64> = (0..d).map(|_| (rng.random_range(-3.0..0.0f64) * std::f64::consts::LN_10).exp()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let theta_star: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
    let norm = rng.random_range(0.2..2.0);
    let dir = unit_gaussian_direction(&mut rng, d);
    let theta0: Vec<f64> = theta_star.iter().zip(&dir).map(|(a, u)| a + norm * u).collect();
    let sigma2 = rng.random_range(0.0..2.0);
    let tau2 = rng.random_range(0.0..2.0);
    SpectralProblem::new(format!("random-d{d}-s{seed}"), seed, Spectrum::new(s)?, theta_star.into(), theta0.into(), sigma2, tau2, 3.0)
}

/// Empirical fourth-moment ratios E⟨z,x⟩⁴ / (zᵀΣz)² for Gaussian inputs on a
/// fixed probe set: the leading eigen-directions, the all-ones direction and
/// three seeded random directions.
pub fn kurtosis_ratios(p: &SpectralProblem, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if samples < 100 {
        return domain("at least 100 samples are required");
    }
    let d = p.dim();
    let mut probes: Vec<Vec<f64>> = Vec::new();
    for i in 0..d.min(3) {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        probes.push(e);
    }
    probes.push(vec![1.0 / (d as f64).sqrt(); d]);
    let mut prng = stream(seed ^ 0xA5A5_A5A5_A5A5_A5A5);
    for _ in 0..3 {
        probes.push(unit_gaussian_direction(&mut prng, d));
    }
    let s = p.spectrum.values();
    let sd: Vec<f64> = s.iter().map(|v| v.sqrt()).collect();
    let mut rng = stream(seed);
    let mut fourth = vec![0.0; probes.len()];
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        for (xi, si) in x.iter_mut().zip(&sd) {
            *xi = si * normal(&mut rng);
        }
        for (f, z) in fourth.iter_mut().zip(&probes) {
            let proj: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            *f += proj.powi(4);
        }
    }
    Ok(probes
        .iter()
        .zip(&fourth)
        .map(|(z, f)| {
            let q: f64 = z.iter().zip(s).map(|(zi, si)| si * zi * zi).sum();
            f / samples as f64 / (q * q)
        })
        .collect())
}

/// Largest probe ratio from [`kurtosis_ratios`]; concentrates near 3 for Gaussian inputs.
pub fn estimate_kurtosis_bound(p: &SpectralProblem, samples: usize, seed: u64) -> Result<f64> {
    Ok(kurtosis_ratios(p, samples, seed)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}
