//! Coordinate-wise arithmetic in the eigenbasis of the covariance operator.
//!
//! Every operator in this crate is diagonal in the eigenbasis of Σ, so a matrix
//! is stored as its spectrum and a vector as its eigen-coordinates.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, domain, Error, Result};
use crate::problems::SpectralProblem;

/// Eigenvalues of Σ, strictly positive and sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    /// Validates positivity, finiteness and ordering.
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return domain("spectrum must have at least one eigenvalue");
        }
        for (i, &s) in eigenvalues.iter().enumerate() {
            if !(s.is_finite() && s > 0.0) {
                return domain(format!("eigenvalue {i} = {s} is not a positive finite number"));
            }
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return domain("eigenvalues must be sorted non-increasing");
        }
        Ok(Self(eigenvalues))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Largest eigenvalue L.
    pub fn largest(&self) -> f64 {
        self.0[0]
    }

    /// Trace of Σ.
    pub fn trace(&self) -> f64 {
        sum(self.0.iter().copied())
    }
}

impl TryFrom<Vec<f64>> for Spectrum {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Spectrum::new(v)
    }
}

impl From<Spectrum> for Vec<f64> {
    fn from(s: Spectrum) -> Self {
        s.0
    }
}

/// Coordinates of a vector in the eigenbasis of Σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EigenVector(pub Vec<f64>);

impl EigenVector {
    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Coordinate-wise difference `self - other`.
    pub fn sub(&self, other: &EigenVector) -> Result<EigenVector> {
        check_dim(self.dim(), other.dim())?;
        Ok(EigenVector(self.iter().zip(other.iter()).map(|(a, b)| a - b).collect()))
    }

    /// Euclidean norm squared.
    pub fn norm_sq(&self) -> f64 {
        sum(self.iter().map(|v| v * v))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for EigenVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for EigenVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for EigenVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Neumaier's compensated summation.
///
/// Long accumulations in the analytic oracles and rate fits rely on this to keep
/// rounding error well below 1e-12 relative.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator.
pub fn sum(iter: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// Compensated inner product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// ‖Σ^{p/2} v‖² = Σᵢ sᵢᵖ vᵢ².
pub fn quad_form(v: &[f64], spec: &Spectrum, power: f64) -> Result<f64> {
    check_dim(spec.dim(), v.len())?;
    if !power.is_finite() {
        return domain(format!("power {power} is not finite"));
    }
    Ok(sum(spec.values().iter().zip(v).map(|(&s, &x)| if x == 0.0 { 0.0 } else { s.powf(power) * x * x })))
}

/// Excess risk ½‖Σ^{1/2}(θ − θ*)‖² of an iterate given in eigen-coordinates.
pub fn excess_risk(theta: &[f64], problem: &SpectralProblem) -> Result<f64> {
    check_dim(problem.dim(), theta.len())?;
    Ok(0.5
        * sum(problem.spectrum.values().iter().zip(theta.iter().zip(problem.theta_star.iter())).map(|(&s, (&t, &ts))| {
            let e = t - ts;
            s * e * e
        })))
}

/// tr Σᵇ for b in [0, 1].
pub fn trace_power(spec: &Spectrum, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&b) {
        return domain(format!("trace exponent b = {b} must lie in [0, 1]"));
    }
    Ok(trace_power_unchecked(spec, b))
}

/// tr Σᵖ for any finite exponent; used by calculators that allow p outside [0, 1].
pub(crate) fn trace_power_unchecked(spec: &Spectrum, p: f64) -> f64 {
    if p == 0.0 {
        spec.dim() as f64
    } else {
        sum(spec.values().iter().map(|s| s.powf(p)))
    }
}
