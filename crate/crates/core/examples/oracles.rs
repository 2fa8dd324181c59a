//! Draws gradients from the three oracles at a fixed point and compares their
//! sample means with the true gradient Σ(θ − θ*).
//!
//! Run with `cargo run --release --example oracles`.

use lsq_accel::oracles::{additive_sampled_tau2, SampledOracle};
use lsq_accel::problems::make_random_problem;
use lsq_accel::{GradientOracle, OracleKind, Result};

fn main() -> Result<()> {
    let p = make_random_problem(3, 5)?;
    let theta = [0.5, -0.2, 1.0];
    let truth: Vec<f64> = (0..3).map(|i| p.spectrum.values()[i] * (theta[i] - p.theta_star[i])).collect();
    println!("true gradient: {truth:.4?}");
    let samples = 200_000;
    for kind in OracleKind::ALL {
        let mut oracle = SampledOracle::new(kind, &p, 42);
        let mut g = [0.0; 3];
        let mut mean = [0.0; 3];
        for _ in 0..samples {
            oracle.gradient(&theta, &mut g);
            for i in 0..3 {
                mean[i] += g[i] / samples as f64;
            }
        }
        println!("{:<20} mean of {samples} draws: {mean:.4?}", kind.name());
    }
    println!("noise level of the sampled additive oracle: τ² = {:.4}", additive_sampled_tau2(&p));
    Ok(())
}
