//! Property checks shared by the property suite and the acceptance run.
//!
//! Each check returns `Err` with a description of the first violation so that
//! callers can either assert on it or tally it.

#![allow(dead_code)]

use lsq_accel::analytic::bounds::bound_th2;
use lsq_accel::analytic::{exact_acc_risk_moment, exact_avsgd_risk};
use lsq_accel::oracles::SampledOracle;
use lsq_accel::problems::make_random_problem;
use lsq_accel::rng::{normal, stream};
use lsq_accel::solvers::{acc_step, delta_lower, run, run_with_oracle, sgd_step, update_averages};
use lsq_accel::{Algorithm, EigenVector, GradientOracle, OracleKind, SolverConfig, SolverState, SpectralProblem, Spectrum};

pub type Check = std::result::Result<(), String>;

/// Relative gap |a − b| / max(|a|, |b|, floor).
pub fn rel_gap(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Additive oracle replaying a pre-drawn noise tape, one row per iteration.
pub struct TapeOracle {
    pub spectrum: Vec<f64>,
    pub theta_star: Vec<f64>,
    pub tape: Vec<Vec<f64>>,
    pub step: usize,
}

impl TapeOracle {
    pub fn new(p: &SpectralProblem, tape: Vec<Vec<f64>>) -> Self {
        Self { spectrum: p.spectrum.values().to_vec(), theta_star: p.theta_star.to_vec(), tape, step: 0 }
    }

    /// Tape of ξ ~ N(0, τ²Σ) draws for `n` iterations.
    pub fn gaussian_tape(p: &SpectralProblem, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed);
        let tau = p.tau2.sqrt();
        (0..n).map(|_| p.spectrum.values().iter().map(|s| tau * s.sqrt() * normal(&mut rng)).collect()).collect()
    }
}

impl GradientOracle for TapeOracle {
    fn gradient(&mut self, point: &[f64], out: &mut [f64]) {
        let xi = &self.tape[self.step];
        for i in 0..out.len() {
            out[i] = self.spectrum[i] * (point[i] - self.theta_star[i]) - xi[i];
        }
        self.step += 1;
    }
}

/// An admissible configuration for the additive oracle drawn from `seed`.
pub fn admissible_config(p: &SpectralProblem, alg: Algorithm, n: usize, seed: u64) -> SolverConfig {
    let mut rng = stream(seed);
    let mut u = || rand::Rng::random::<f64>(&mut rng);
    let lambda = if u() < 0.3 { 0.0 } else { 10f64.powf(-4.0 + 3.0 * u()) };
    let gamma = (0.05 + 0.95 * u()) / (p.spectrum.largest() + lambda);
    let delta = if alg.is_accelerated() {
        let lo = delta_lower(gamma, lambda);
        lo + (1.0 - lo) * u()
    } else {
        0.0
    };
    SolverConfig::new(alg, gamma, lambda, delta, n)
}

/// Scalar problem holding coordinate `i` of `p`.
pub fn coordinate_problem(p: &SpectralProblem, i: usize) -> SpectralProblem {
    SpectralProblem::new(
        format!("{}-coord{i}", p.id),
        p.seed,
        Spectrum::new(vec![p.spectrum.values()[i]]).unwrap(),
        vec![p.theta_star[i]].into(),
        vec![p.theta0[i]].into(),
        p.sigma2,
        p.tau2,
        p.kurtosis,
    )
    .unwrap()
}

/// The d-dimensional recursion equals d scalar recursions fed the same noise.
pub fn check_eigen_decoupling(p: &SpectralProblem, cfg: &SolverConfig, seed: u64) -> Check {
    let tape = TapeOracle::gaussian_tape(p, cfg.horizon, seed);
    let mut full = TapeOracle::new(p, tape.clone());
    let (rec, state) = run_with_oracle(p, OracleKind::AdditiveGaussian, cfg, seed, &mut full).map_err(|e| e.to_string())?;
    let mut summed = vec![[0.0f64; 3]; rec.rows.len()];
    for i in 0..p.dim() {
        let q = coordinate_problem(p, i);
        let column: Vec<Vec<f64>> = tape.iter().map(|row| vec![row[i]]).collect();
        let mut scalar = TapeOracle::new(&q, column);
        let (r1, s1) = run_with_oracle(&q, OracleKind::AdditiveGaussian, cfg, seed, &mut scalar).map_err(|e| e.to_string())?;
        for (name, a, b) in [
            ("current", state.current[i], s1.current[0]),
            ("previous", state.previous[i], s1.previous[0]),
            ("uniform average", state.avg_uniform[i], s1.avg_uniform[0]),
            ("weighted average", state.avg_weighted[i], s1.avg_weighted[0]),
        ] {
            if rel_gap(a, b, 1.0) > 1e-13 {
                return Err(format!("coordinate {i}, {name}: {a} vs {b}"));
            }
        }
        for (acc, row) in summed.iter_mut().zip(&r1.rows) {
            acc[0] += row.risk_last;
            acc[1] += row.risk_avg;
            acc[2] += row.risk_wavg.unwrap_or(0.0);
        }
    }
    for (acc, row) in summed.iter().zip(&rec.rows) {
        let full = [row.risk_last, row.risk_avg, row.risk_wavg.unwrap_or(0.0)];
        for k in 0..3 {
            if rel_gap(acc[k], full[k], 1e-300) > 1e-13 {
                return Err(format!("risk column {k} at iter {}: summed {} vs full {}", row.iter, acc[k], full[k]));
            }
        }
    }
    Ok(())
}

/// Rotating the problem leaves every recorded risk unchanged.
pub fn check_rotation_invariance(p: &SpectralProblem, oracle: OracleKind, cfg: &SolverConfig, seed: u64, rot_seed: u64) -> Check {
    let rotated = p.clone().with_rotation(rot_seed);
    let a = run(p, oracle, cfg, seed).map_err(|e| e.to_string())?;
    let b = run(&rotated, oracle, cfg, seed).map_err(|e| e.to_string())?;
    for (x, y) in a.rows.iter().zip(&b.rows) {
        let pairs = [(x.risk_last, y.risk_last), (x.risk_avg, y.risk_avg), (x.risk_wavg.unwrap_or(0.0), y.risk_wavg.unwrap_or(0.0))];
        for (u, v) in pairs {
            if rel_gap(u, v, 1e-300) > 1e-10 {
                return Err(format!("iter {}: {u} vs {v} after rotation", x.iter));
            }
        }
    }
    Ok(())
}

/// Online averages equal the offline means of the stored iterates.
pub fn check_online_averaging(p: &SpectralProblem, cfg: &SolverConfig, seed: u64) -> Check {
    let mut oracle = SampledOracle::new(OracleKind::AdditiveGaussian, p, seed);
    let d = p.dim();
    let mut state = SolverState::new(p.theta0.clone());
    let mut iterates = vec![p.theta0.to_vec()];
    let (mut grad, mut point) = (vec![0.0; d], vec![0.0; d]);
    for _ in 0..cfg.horizon {
        if cfg.algorithm.is_accelerated() {
            state.extrapolation(cfg.delta_at(state.iter + 1), &mut point);
            oracle.gradient(&point, &mut grad);
            acc_step(&mut state, &grad, cfg).map_err(|e| e.to_string())?;
        } else {
            oracle.gradient(&state.current, &mut grad);
            sgd_step(&mut state, &grad, cfg).map_err(|e| e.to_string())?;
        }
        update_averages(&mut state);
        iterates.push(state.current.to_vec());
    }
    let n = cfg.horizon;
    for i in 0..d {
        let mean = iterates.iter().map(|t| t[i]).sum::<f64>() / (n + 1) as f64;
        let scale = iterates.iter().map(|t| t[i].abs()).fold(0.0, f64::max);
        if (state.avg_uniform[i] - mean).abs() > 1e-12 * scale.max(1e-300) {
            return Err(format!("uniform average coordinate {i}: online {} vs offline {mean}", state.avg_uniform[i]));
        }
        let weighted = iterates.iter().enumerate().map(|(k, t)| k as f64 * t[i]).sum::<f64>() * 2.0 / (n * (n + 1)) as f64;
        if (state.avg_weighted[i] - weighted).abs() > 1e-12 * scale.max(1e-300) {
            return Err(format!("weighted average coordinate {i}: online {} vs offline {weighted}", state.avg_weighted[i]));
        }
    }
    Ok(())
}

/// Without noise, runs do not depend on the seed and AvAccGD stays below the Theorem 2 bound.
pub fn check_zero_noise(p: &SpectralProblem, cfg: &SolverConfig) -> Check {
    let quiet = p.clone().with_noise(0.0, 0.0).map_err(|e| e.to_string())?;
    for oracle in [OracleKind::AdditiveGaussian, OracleKind::AdditiveSampled] {
        let a = run(&quiet, oracle, cfg, 1).map_err(|e| e.to_string())?;
        let b = run(&quiet, oracle, cfg, 2).map_err(|e| e.to_string())?;
        if oracle == OracleKind::AdditiveGaussian && a.rows != b.rows {
            return Err("noise-free additive runs depend on the seed".into());
        }
        if oracle == OracleKind::AdditiveSampled && quiet.theta_star.norm_sq() == 0.0 && a.rows != b.rows {
            return Err("noise-free sampled runs at θ* = 0 depend on the seed".into());
        }
    }
    if cfg.algorithm == Algorithm::AvAccGD {
        let rec = run(&quiet, OracleKind::AdditiveGaussian, cfg, 0).map_err(|e| e.to_string())?;
        for row in &rec.rows {
            if row.iter == 0 {
                continue;
            }
            let bound = bound_th2(&quiet, cfg.gamma, cfg.lambda, row.iter).map_err(|e| e.to_string())?.total;
            if row.risk_avg > bound * (1.0 + 1e-12) {
                return Err(format!("iter {}: risk {} above the Theorem 2 bound {bound}", row.iter, row.risk_avg));
            }
        }
    }
    Ok(())
}

/// Same seed gives bit-identical records; a different seed changes a noisy run.
pub fn check_reseeding(p: &SpectralProblem, oracle: OracleKind, cfg: &SolverConfig, seed: u64) -> Check {
    let a = run(p, oracle, cfg, seed).map_err(|e| e.to_string())?;
    let b = run(p, oracle, cfg, seed).map_err(|e| e.to_string())?;
    if a != b {
        return Err(format!("seed {seed} gave two different records"));
    }
    let c = run(p, oracle, cfg, seed.wrapping_add(1)).map_err(|e| e.to_string())?;
    if p.tau2 > 0.0 && p.sigma2 > 0.0 && a.rows == c.rows && cfg.horizon > 0 {
        return Err(format!("seeds {seed} and {} gave identical noisy records", seed.wrapping_add(1)));
    }
    Ok(())
}

/// Exact-risk components sum to the total.
pub fn check_component_additivity(p: &SpectralProblem, cfg: &SolverConfig, checkpoints: &[usize]) -> Check {
    let res =
        if cfg.algorithm.is_accelerated() { exact_acc_risk_moment(p, cfg, checkpoints) } else { exact_avsgd_risk(p, cfg, checkpoints) }
            .map_err(|e| e.to_string())?;
    for row in &res.rows {
        let sum = row.bias_reg + row.bias_opt + row.variance;
        let scale = row.bias_reg.abs() + row.bias_opt.abs() + row.variance.abs();
        if (sum - row.exact_risk).abs() > 1e-12 * scale.max(1e-300) {
            return Err(format!("n = {}: components sum to {sum}, total {}", row.n, row.exact_risk));
        }
    }
    Ok(())
}

/// Runs every property on the random problem of dimension `d` and seed `seed`.
pub fn property_sweep(d: usize, seed: u64, n: usize) -> Vec<(&'static str, Check)> {
    let p = make_random_problem(d, seed).unwrap();
    let cps: Vec<usize> = (0..=n).step_by((n / 10).max(1)).collect();
    let mut out = Vec::new();
    for (k, alg) in [Algorithm::AvGD, Algorithm::AvAccGD, Algorithm::WAvAccGD].into_iter().enumerate() {
        let cfg = admissible_config(&p, alg, n, seed * 31 + k as u64).with_checkpoints(cps.clone());
        out.push(("eigen-decoupling", check_eigen_decoupling(&p, &cfg, seed)));
        out.push(("rotation invariance", check_rotation_invariance(&p, OracleKind::AdditiveGaussian, &cfg, seed, seed + 100)));
        out.push(("online-vs-batch averaging", check_online_averaging(&p, &cfg, seed)));
        out.push(("zero-noise determinism", check_zero_noise(&p, &cfg)));
        out.push(("determinism under re-seeding", check_reseeding(&p, OracleKind::AdditiveGaussian, &cfg, seed)));
        out.push(("component additivity", check_component_additivity(&p, &cfg, &cps)));
    }
    let stoch = SolverConfig::new(Algorithm::AvGD, 1.0 / (2.0 * p.r2()), 0.0, 0.0, n).with_checkpoints(cps);
    out.push(("rotation invariance", check_rotation_invariance(&p, OracleKind::Multiplicative, &stoch, seed, seed + 200)));
    out.push(("determinism under re-seeding", check_reseeding(&p, OracleKind::Multiplicative, &stoch, seed)));
    out
}

/// Convenience for building small problems in tests.
pub fn small_problem(spectrum: Vec<f64>, theta_star: Vec<f64>, theta0: Vec<f64>, sigma2: f64, tau2: f64) -> SpectralProblem {
    SpectralProblem::new("test", 0, Spectrum::new(spectrum).unwrap(), EigenVector(theta_star), EigenVector(theta0), sigma2, tau2, 3.0)
        .unwrap()
}
