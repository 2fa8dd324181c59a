//! Reproduces both panels of the Figure 1 experiment and writes the curves.
//!
//! Run with `cargo run --release --example figure1 -- [output-dir]`.

use lsq_accel::harness::fig1::{run_fig1, Fig1Options};
use lsq_accel::Result;

fn main() -> Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/fig1".into());
    let report = run_fig1(&Fig1Options::default())?;
    for panel in [&report.bias, &report.variance] {
        for (cell, fit) in &panel.fits {
            println!(
                "{:<9} {:<9} slope {:>7.3}  final risk {:.3e}",
                panel.panel.name(),
                cell,
                fit.slope,
                panel.final_mean(cell).unwrap_or(f64::NAN)
            );
        }
    }
    for c in &report.checks {
        println!("[{}] {} ({})", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    report.write_outputs(&out)?;
    println!("curves written to {out}");
    Ok(())
}
