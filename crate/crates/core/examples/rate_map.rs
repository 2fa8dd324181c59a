//! Fits the convergence exponent of AvGD and AvAccGD on power-law problems and
//! compares it with the predicted rates.
//!
//! Run with `cargo run --release --example rate_map`.

use lsq_accel::analytic::rates::{rate_th5, rate_th6};
use lsq_accel::harness::{rate_map, RateMapMode, RateMapOptions};
use lsq_accel::{Algorithm, Result};

fn main() -> Result<()> {
    let b = 0.5;
    let rs = [0.0, 0.4, 0.75];
    for &r in &rs {
        let (p5, p6) = (rate_th5(r, b)?, rate_th6(r, b)?);
        println!(
            "r = {r}: AvGD exponent {:.3} (optimal: {}), AvAccGD exponent {:.3} (optimal: {})",
            p5.exponent, p5.valid, p6.exponent, p6.valid
        );
    }
    let horizons: Vec<usize> = (7..=13).map(|k| 1usize << k).collect();
    let opts = RateMapOptions { seed: 0, mode: RateMapMode::Exact, tail_fraction: 0.1 };
    let table = rate_map(b, &rs, 80_000, &horizons, opts)?;
    for &r in &rs {
        for alg in [Algorithm::AvGD, Algorithm::AvAccGD] {
            let row = table.row(r, alg).expect("row exists");
            println!(
                "r = {r:<4} {:<8} fitted {:>7.3}  predicted {:>7.3}  R² {:.4}",
                alg.name(),
                row.fit.slope,
                row.predicted,
                row.fit.r_squared
            );
        }
    }
    Ok(())
}
