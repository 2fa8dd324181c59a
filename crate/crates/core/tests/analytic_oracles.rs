//! Independent oracles for the solvers and the exact risk.
//!
//! The dense checks work in a randomly rotated basis with full matrices, so
//! they share no code path with the eigenbasis implementation.

mod common;

use common::*;
use lsq_accel::analytic::{classify, exact_acc_risk_moment, exact_acc_risk_spectral, exact_avsgd_risk, RootClass};
use lsq_accel::harness::{compare_mc_to_oracle, run_experiment, CellSpec, CheckpointGrid, ExperimentSpec, ProblemOverrides, ProblemSource};
use lsq_accel::oracles::SampledOracle;
use lsq_accel::problems::make_random_problem;
use lsq_accel::rng::{normal, stream};
use lsq_accel::solvers::{delta_lower, run, run_with_oracle};
use lsq_accel::{Algorithm, GradientOracle, OracleKind, SolverConfig, SpectralProblem};
use nalgebra::{DMatrix, DVector};

/// Σ = QSQᵀ with a Haar-like rotation Q, and the ambient θ*, θ₀.
struct Dense {
    sigma: DMatrix<f64>,
    theta_star: DVector<f64>,
    theta0: DVector<f64>,
}

fn dense(p: &SpectralProblem, seed: u64) -> Dense {
    let d = p.dim();
    let mut rng = stream(seed ^ 0xdead_beef);
    let g = DMatrix::from_fn(d, d, |_, _| normal(&mut rng));
    let q = g.qr().q();
    let s = DMatrix::from_diagonal(&DVector::from_column_slice(p.spectrum.values()));
    Dense {
        sigma: &q * s * q.transpose(),
        theta_star: &q * DVector::from_column_slice(&p.theta_star),
        theta0: &q * DVector::from_column_slice(&p.theta0),
    }
}

fn half_quad(sigma: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    0.5 * v.dot(&(sigma * v))
}

/// Mean and covariance propagation of (eₙ, eₙ₋₁, ēₙ) with e = θ − θ*.
fn propagated_risk(p: &SpectralProblem, cfg: &SolverConfig, dn: &Dense, checkpoints: &[usize]) -> Vec<f64> {
    let d = p.dim();
    let (g, l) = (cfg.gamma, cfg.lambda);
    let eye = DMatrix::<f64>::identity(d, d);
    let m = &eye - (&dn.sigma + &eye * l) * g;
    let delta0 = &dn.theta0 - &dn.theta_star;
    let mut mean = DVector::<f64>::zeros(3 * d);
    for k in 0..3 {
        mean.rows_mut(k * d, d).copy_from(&delta0);
    }
    let mut cov = DMatrix::<f64>::zeros(3 * d, 3 * d);
    let noise = &dn.sigma * (p.tau2 * g * g);
    let mut out = Vec::new();
    let record = |mean: &DVector<f64>, cov: &DMatrix<f64>| {
        let mbar = mean.rows(2 * d, d).into_owned();
        let cbar = cov.view((2 * d, 2 * d), (d, d)).into_owned();
        0.5 * (&dn.sigma * cbar).trace() + half_quad(&dn.sigma, &mbar)
    };
    if checkpoints.first() == Some(&0) {
        out.push(record(&mean, &cov));
    }
    for n in 1..=cfg.horizon {
        let delta = cfg.delta_at(n);
        let w = n as f64 / (n as f64 + 1.0);
        let mut a = DMatrix::<f64>::zeros(3 * d, 3 * d);
        let top_cur = &m * (1.0 + delta);
        let top_prev = &m * (-delta);
        a.view_mut((0, 0), (d, d)).copy_from(&top_cur);
        a.view_mut((0, d), (d, d)).copy_from(&top_prev);
        a.view_mut((d, 0), (d, d)).copy_from(&eye);
        a.view_mut((2 * d, 0), (d, d)).copy_from(&(&top_cur * (1.0 - w)));
        a.view_mut((2 * d, d), (d, d)).copy_from(&(&top_prev * (1.0 - w)));
        a.view_mut((2 * d, 2 * d), (d, d)).copy_from(&(&eye * w));
        let mut c = DVector::<f64>::zeros(3 * d);
        let shift = &delta0 * (g * l);
        c.rows_mut(0, d).copy_from(&shift);
        c.rows_mut(2 * d, d).copy_from(&(&shift * (1.0 - w)));
        let mut b = DMatrix::<f64>::zeros(3 * d, d);
        b.view_mut((0, 0), (d, d)).copy_from(&eye);
        b.view_mut((2 * d, 0), (d, d)).copy_from(&(&eye * (1.0 - w)));
        mean = &a * mean + c;
        cov = &a * cov * a.transpose() + &b * &noise * b.transpose();
        if checkpoints.contains(&n) {
            out.push(record(&mean, &cov));
        }
    }
    out
}

#[test]
fn exact_risk_matches_dense_covariance_propagation() {
    let mut worst = 0.0f64;
    for seed in 0..12u64 {
        let d = 1 + (seed as usize % 3);
        let p = make_random_problem(d, seed).unwrap();
        let dn = dense(&p, seed);
        for (k, alg) in [Algorithm::AvGD, Algorithm::AvAccGD].into_iter().enumerate() {
            let n = 50 + 30 * seed as usize % 150;
            let cfg = admissible_config(&p, alg, n, seed * 5 + k as u64);
            let cps: Vec<usize> = (0..=n).step_by(7).collect();
            let want = propagated_risk(&p, &cfg, &dn, &cps);
            let got = if alg.is_accelerated() {
                exact_acc_risk_moment(&p, &cfg, &cps).unwrap()
            } else {
                exact_avsgd_risk(&p, &cfg, &cps).unwrap()
            };
            for ((row, w), &n) in got.rows.iter().zip(&want).zip(&cps) {
                let gap = rel_gap(row.exact_risk, *w, 1e-300);
                worst = worst.max(gap);
                assert!(gap < 1e-10, "seed {seed} {alg} n={n}: exact {} vs propagated {w}", row.exact_risk);
            }
        }
    }
    println!("largest relative gap to covariance propagation: {worst:.2e}");
}

#[test]
fn time_varying_momentum_is_rejected_by_exact_routes() {
    let p = make_random_problem(3, 4).unwrap();
    let cfg = SolverConfig::new(Algorithm::AvAccGD, 0.8 / p.l(), 0.0, 1.0, 120).with_momentum(lsq_accel::MomentumSchedule::Nesterov);
    for res in [exact_acc_risk_moment(&p, &cfg, &[120]), exact_acc_risk_spectral(&p, &cfg, &[120])] {
        assert!(matches!(res, Err(lsq_accel::Error::UnsupportedRegime(_))));
    }
}

#[test]
fn noiseless_sgd_matches_matrix_powers() {
    for seed in 0..9u64 {
        let d = 1 + (seed as usize % 3);
        let p = make_random_problem(d, seed).unwrap().with_noise(0.0, 0.0).unwrap();
        let dn = dense(&p, seed + 50);
        let cfg = admissible_config(&p, Algorithm::AvGD, 20, seed).with_checkpoints((0..=20).collect());
        let rec = run(&p, OracleKind::AdditiveGaussian, &cfg, seed).unwrap();
        let eye = DMatrix::<f64>::identity(d, d);
        let reg = &dn.sigma + &eye * cfg.lambda;
        let m = &eye - &reg * cfg.gamma;
        let fixed = reg.clone().try_inverse().unwrap() * (&dn.sigma * &dn.theta_star + &dn.theta0 * cfg.lambda);
        let start = &dn.theta0 - &fixed;
        let mut avg = DVector::<f64>::zeros(d);
        for (n, row) in rec.rows.iter().enumerate() {
            let theta = &fixed + m.pow(n as u32) * &start;
            avg += &theta;
            let theta_bar = &avg / (n as f64 + 1.0);
            let last = half_quad(&dn.sigma, &(&theta - &dn.theta_star));
            let mean = half_quad(&dn.sigma, &(theta_bar - &dn.theta_star));
            assert!(rel_gap(row.risk_last, last, 1e-300) < 1e-12, "seed {seed} n={n}: {} vs {last}", row.risk_last);
            assert!(rel_gap(row.risk_avg, mean, 1e-300) < 1e-12, "seed {seed} n={n}: {} vs {mean}", row.risk_avg);
        }
    }
}

#[test]
fn accelerated_run_matches_transfer_matrix_iteration() {
    for seed in 0..9u64 {
        let d = 1 + (seed as usize % 3);
        let p = make_random_problem(d, seed).unwrap();
        let n = 50;
        let cfg = admissible_config(&p, Algorithm::AvAccGD, n, seed + 3).with_checkpoints((0..=n).collect());
        let tape = TapeOracle::gaussian_tape(&p, n, seed);
        let mut oracle = TapeOracle::new(&p, tape.clone());
        let (rec, state) = run_with_oracle(&p, OracleKind::AdditiveGaussian, &cfg, seed, &mut oracle).unwrap();
        let (g, l, dl) = (cfg.gamma, cfg.lambda, cfg.delta);
        let mut risks = vec![0.0; n + 1];
        for i in 0..d {
            let s = p.spectrum.values()[i];
            let t = 1.0 - g * (s + l);
            let f = [[(1.0 + dl) * t, -dl * t], [1.0, 0.0]];
            let drive = g * s * p.theta_star[i] + g * l * p.theta0[i];
            let mut big = [p.theta0[i], p.theta0[i]];
            risks[0] += 0.5 * s * (big[0] - p.theta_star[i]).powi(2);
            for (k, row) in tape.iter().enumerate() {
                big = [f[0][0] * big[0] + f[0][1] * big[1] + drive + g * row[i], big[0]];
                risks[k + 1] += 0.5 * s * (big[0] - p.theta_star[i]).powi(2);
            }
            assert!(rel_gap(big[0], state.current[i], 1.0) < 1e-12);
            assert!(rel_gap(big[1], state.previous[i], 1.0) < 1e-12);
        }
        for (row, want) in rec.rows.iter().zip(&risks) {
            assert!(rel_gap(row.risk_last, *want, 1e-300) < 1e-11, "seed {seed} iter {}: {} vs {want}", row.iter, row.risk_last);
        }
    }
}

#[test]
fn oracles_are_unbiased() {
    let p = make_random_problem(3, 21).unwrap();
    let theta = [0.3, -1.1, 0.7];
    let expected: Vec<f64> = (0..3).map(|i| p.spectrum.values()[i] * (theta[i] - p.theta_star[i])).collect();
    let samples = 100_000;
    for kind in OracleKind::ALL {
        let mut oracle = SampledOracle::new(kind, &p, 99);
        let mut g = [0.0; 3];
        let (mut sum, mut sq) = ([0.0f64; 3], [0.0f64; 3]);
        for _ in 0..samples {
            oracle.gradient(&theta, &mut g);
            for i in 0..3 {
                sum[i] += g[i];
                sq[i] += g[i] * g[i];
            }
        }
        for i in 0..3 {
            let mean = sum[i] / samples as f64;
            let var = sq[i] / samples as f64 - mean * mean;
            let se = (var / samples as f64).sqrt();
            assert!((mean - expected[i]).abs() <= 5.0 * se, "{kind} coordinate {i}: mean {mean}, expected {}, se {se}", expected[i]);
        }
    }
}

fn mc_vs_exact(p: &SpectralProblem, cfg: &SolverConfig, reps: usize, seed: u64) -> lsq_accel::harness::CompareReport {
    let cell = CellSpec::explicit(cfg.algorithm, OracleKind::AdditiveGaussian, cfg.horizon, cfg.gamma, cfg.lambda, cfg.delta).with_id("mc");
    let spec = ExperimentSpec {
        name: "mc".into(),
        problem: ProblemSource::Inline { problem: Box::new(p.clone()) },
        overrides: ProblemOverrides::default(),
        cells: vec![cell],
        replications: reps,
        base_seed: seed,
        checkpoints: CheckpointGrid::Explicit { iters: cfg.checkpoints.clone() },
        fresh_problem_per_replication: false,
        output: None,
    };
    let res = run_experiment(&spec).unwrap();
    let exact = if cfg.algorithm.is_accelerated() {
        exact_acc_risk_moment(p, cfg, &cfg.checkpoints).unwrap()
    } else {
        exact_avsgd_risk(p, cfg, &cfg.checkpoints).unwrap()
    };
    compare_mc_to_oracle(res.summary("mc").unwrap(), &exact).unwrap()
}

#[test]
fn averaged_sgd_exact_risk_matches_monte_carlo() {
    let p = make_random_problem(3, 8).unwrap();
    let cfg = admissible_config(&p, Algorithm::AvGD, 200, 8).with_checkpoints(vec![1, 5, 20, 60, 200]);
    let report = mc_vs_exact(&p, &cfg, 2000, 8);
    assert!(report.max_abs_z <= 4.0, "{report:?}");
}

#[test]
fn negative_control_is_flagged() {
    let p = make_random_problem(3, 8).unwrap();
    let cfg = admissible_config(&p, Algorithm::AvAccGD, 200, 8).with_checkpoints(vec![20, 60, 200]);
    let louder = p.clone().with_noise(p.sigma2, 1.5 * p.tau2).unwrap();
    let report = mc_vs_exact(&louder, &cfg, 1000, 8);
    assert!(!report.flagged, "{report:?}");
    let exact = exact_acc_risk_moment(&p, &cfg, &cfg.checkpoints).unwrap();
    let mut summary = {
        let cell = CellSpec::explicit(cfg.algorithm, OracleKind::AdditiveGaussian, 200, cfg.gamma, cfg.lambda, cfg.delta).with_id("mc");
        let spec = ExperimentSpec {
            name: "mc".into(),
            problem: ProblemSource::Inline { problem: Box::new(louder) },
            overrides: ProblemOverrides::default(),
            cells: vec![cell],
            replications: 1000,
            base_seed: 8,
            checkpoints: CheckpointGrid::Explicit { iters: cfg.checkpoints.clone() },
            fresh_problem_per_replication: false,
            output: None,
        };
        run_experiment(&spec).unwrap().summaries.remove(0)
    };
    summary.cell_id = "louder".into();
    assert!(compare_mc_to_oracle(&summary, &exact).unwrap().flagged);
}

#[test]
fn spectral_agrees_with_moment_and_approaches_coalescence() {
    for seed in 0..15u64 {
        let d = [1, 2, 5][seed as usize % 3];
        let p = make_random_problem(d, seed).unwrap();
        let n = [10, 100, 1000][(seed as usize / 3) % 3];
        let cfg = admissible_config(&p, Algorithm::AvAccGD, n, seed + 40);
        let cps: Vec<usize> = (0..=n).step_by((n / 10).max(1)).collect();
        let m = exact_acc_risk_moment(&p, &cfg, &cps).unwrap();
        let s = exact_acc_risk_spectral(&p, &cfg, &cps).unwrap();
        for (a, b) in m.rows.iter().zip(&s.rows) {
            assert!(
                rel_gap(a.exact_risk, b.exact_risk, 1e-300) < 1e-8,
                "seed {seed} n={}: moment {} spectral {}",
                a.n,
                a.exact_risk,
                b.exact_risk
            );
        }
    }
    // Approach the repeated root of the slowest component from the complex side.
    let p = make_random_problem(3, 77).unwrap();
    let (gamma, lambda) = (0.5 / p.l(), 0.0);
    let a = gamma * p.spectrum.values()[2];
    let delta_c = (1.0 - a.sqrt()) / (1.0 + a.sqrt());
    for k in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 0.0] {
        let delta = delta_c + k * (1.0 - delta_c);
        let mut cfg = SolverConfig::new(Algorithm::AvAccGD, gamma, lambda, delta, 300);
        cfg.allow_invalid = delta < delta_lower(gamma, lambda);
        let cps = vec![1, 10, 100, 300];
        let m = exact_acc_risk_moment(&p, &cfg, &cps).unwrap();
        let s = exact_acc_risk_spectral(&p, &cfg, &cps).unwrap();
        let coalescent = matches!(classify(1.0 - a, delta), RootClass::Coalescent { .. });
        let tol = if coalescent { 1e-4 } else { 1e-8 };
        for (x, y) in m.rows.iter().zip(&s.rows) {
            let gap = rel_gap(x.exact_risk, y.exact_risk, 1e-300);
            assert!(gap < tol, "offset {k}: n={} gap {gap:.2e} (coalescent {coalescent})", x.n);
        }
    }
}

#[test]
fn distinct_real_roots_are_rejected_by_the_spectral_route() {
    let p = make_random_problem(2, 5).unwrap();
    let mut cfg = SolverConfig::new(Algorithm::AvAccGD, 0.5 / p.l(), 0.0, 0.0, 10);
    cfg.allow_invalid = true;
    let err = exact_acc_risk_spectral(&p, &cfg, &[10]).unwrap_err();
    assert!(matches!(err, lsq_accel::Error::UnsupportedRegime(_)), "{err}");
    assert!(exact_acc_risk_moment(&p, &cfg, &[10]).is_ok());
}
