//! Averaged, accelerated and averaged-accelerated stochastic gradient descent
//! for least-squares regression.
//!
//! Problems live in the eigenbasis of the input covariance Σ, so every operator
//! is a spectrum and every vector a list of eigen-coordinates. The crate offers:
//!
//! * [`problems`]: synthetic problems with controlled spectra, source conditions and noise;
//! * [`oracles`]: the additive and least-mean-squares stochastic gradients;
//! * [`solvers`]: one recursion engine for plain, averaged and accelerated SGD;
//! * [`analytic`]: exact expected risks under Gaussian additive noise and the bound calculators;
//! * [`harness`]: replication sweeps, rate fitting, Monte Carlo checks, rate maps and Figure 1;
//! * [`cli`]: the command-line front end.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod oracles;
pub mod problems;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{excess_risk, quad_form, trace_power, EigenVector, Spectrum};
pub use oracles::{GradientOracle, Observation, OracleKind};
pub use problems::{SourceCondition, SpectralProblem};
pub use solvers::{Algorithm, MomentumSchedule, RunRecord, SolverConfig, SolverState};
