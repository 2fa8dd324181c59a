//! Runs the five algorithms on one problem and prints their risk at a few
//! checkpoints, then shows the parameter prescriptions of the theory.
//!
//! Run with `cargo run --release --example solvers`.

use lsq_accel::problems::make_fig1_problem;
use lsq_accel::solvers::{default_params, run, Regime, RegimeInputs};
use lsq_accel::{Algorithm, OracleKind, Result, SolverConfig};

fn main() -> Result<()> {
    let p = make_fig1_problem(25, 0)?;
    let n = 10_000;
    let gamma = 1.0 / p.spectrum.trace();
    let checkpoints = vec![10, 100, 1000, 10_000];
    println!("{:<10} {:>12} {:>12} {:>12} {:>12}", "algorithm", "n=10", "n=100", "n=1000", "n=10000");
    for alg in [Algorithm::GD, Algorithm::AvGD, Algorithm::AccGD, Algorithm::AvAccGD, Algorithm::WAvAccGD] {
        let delta = if alg.is_accelerated() { 1.0 } else { 0.0 };
        let cfg = SolverConfig::new(alg, gamma, 0.0, delta, n).with_checkpoints(checkpoints.clone());
        let rec = run(&p, OracleKind::AdditiveGaussian, &cfg, 1)?;
        let risks: Vec<String> = rec.reported().iter().map(|(_, r)| format!("{r:12.4e}")).collect();
        println!("{:<10} {}", alg.name(), risks.join(" "));
    }

    // Prescribed tunings for a finite horizon.
    for (alg, regime) in [(Algorithm::AvGD, Regime::Lemma1), (Algorithm::AvGD, Regime::Th1), (Algorithm::AvAccGD, Regime::Cor2)] {
        let params = default_params(&p, alg, n, regime, RegimeInputs { gamma: Some(gamma), r: None, b: None })?;
        let c = &params.config;
        println!(
            "{regime:?}: γ = {:.3e}, λ = {:.3e}, δ = {:.6}{}",
            c.gamma,
            c.lambda,
            c.delta,
            if params.clipped { " (clipped)" } else { "" }
        );
    }
    Ok(())
}
