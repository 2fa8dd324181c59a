//! Runs an experiment described in JSON, writes its CSV outputs and checks
//! the accelerated cell against the exact expected risk.
//!
//! Run with `cargo run --release --example experiment_from_json -- [spec.json]`.

use lsq_accel::analytic::exact_acc_risk_moment;
use lsq_accel::harness::{compare_mc_to_oracle, run_experiment, ExperimentSpec};
use lsq_accel::Result;

fn main() -> Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/experiment.json").into());
    let spec = ExperimentSpec::read_json(&path)?;
    let result = run_experiment(&spec)?;
    for s in &result.summaries {
        let last = s.last().expect("non-empty summary");
        println!("{:<24} n = {:<6} mean risk {:.4e} ± {:.1e}", s.cell_id, last.iter, last.mean_risk, last.stderr);
    }
    let problem = spec.problem_for(0)?;
    let cell = spec.cells.iter().find(|c| c.cell_id() == "avacc").expect("spec has an avacc cell");
    let cfg = cell.config(&problem, &spec.checkpoints)?;
    let exact = exact_acc_risk_moment(&problem, &cfg, &cfg.checkpoints)?;
    let report = compare_mc_to_oracle(result.summary("avacc").expect("summary"), &exact)?;
    println!("Monte Carlo vs exact: max |z| = {:.2}, flagged = {}", report.max_abs_z, report.flagged);
    let out = spec.output.clone().unwrap_or_else(|| "out/experiment".into());
    result.write_outputs(&out)?;
    println!("outputs written to {}", out.display());
    Ok(())
}
