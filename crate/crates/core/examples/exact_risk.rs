//! Exact expected risk of averaged SGD and averaged accelerated SGD under
//! Gaussian additive noise, with the bias and variance split, and the two
//! accelerated routes (direct propagation and closed forms) side by side.
//!
//! Run with `cargo run --release --example exact_risk`.

use lsq_accel::analytic::{exact_acc_risk_moment, exact_acc_risk_spectral, exact_avsgd_risk};
use lsq_accel::problems::make_fig1_problem;
use lsq_accel::solvers::log_checkpoints;
use lsq_accel::{Algorithm, Result, SolverConfig};

fn main() -> Result<()> {
    let p = make_fig1_problem(25, 0)?;
    let n = 100_000;
    let gamma = 1.0 / p.l();
    let cps = log_checkpoints(n, 1);
    let av = exact_avsgd_risk(&p, &SolverConfig::new(Algorithm::AvGD, gamma, 0.0, 0.0, n), &cps)?;
    let cfg = SolverConfig::new(Algorithm::AvAccGD, gamma, 0.0, 1.0, n);
    let moment = exact_acc_risk_moment(&p, &cfg, &cps)?;
    let spectral = exact_acc_risk_spectral(&p, &cfg, &cps)?;
    println!("{:>8} {:>12} {:>12} {:>12} {:>12} {:>10}", "n", "avsgd", "avacc", "avacc bias", "avacc var", "rel gap");
    for ((a, m), s) in av.rows.iter().zip(&moment.rows).zip(&spectral.rows) {
        let gap = (m.exact_risk - s.exact_risk).abs() / m.exact_risk;
        println!(
            "{:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.1e}",
            a.n,
            a.exact_risk,
            m.exact_risk,
            m.bias_reg + m.bias_opt,
            m.variance,
            gap
        );
    }
    Ok(())
}
