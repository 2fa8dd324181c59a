//! Evaluates every bound calculator on one problem and shows the minimizing
//! (r, b) pair of the tighter bounds.
//!
//! Run with `cargo run --example bounds`.

use lsq_accel::analytic::bounds::{
    bound_av_tighter, bound_cor1, bound_cor2, bound_lemma1, bound_lemma1_variants, bound_th1, bound_th2, bound_th3, Lemma1Variant,
};
use lsq_accel::problems::make_fig1_problem;
use lsq_accel::Result;

fn main() -> Result<()> {
    let p = make_fig1_problem(25, 0)?;
    let n = 1000;
    // Leave room for λ inside the constraint γ(L + λ) ≤ 1.
    let gamma = 0.9 / p.l();
    let gamma_stoch = 1.0 / (2.0 * p.r2());
    let lambda = 1.0 / (gamma * n as f64);
    let pairs: Vec<(f64, f64)> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().flat_map(|&r| [0.25, 0.5, 1.0].map(|b| (r, b))).collect();
    let bounds = [
        bound_lemma1(&p, gamma, lambda, n)?,
        bound_lemma1_variants(&p, gamma, lambda, n, Lemma1Variant::NormOnly, None)?,
        bound_lemma1_variants(&p, gamma, lambda, n, Lemma1Variant::Unstructured, None)?,
        bound_th1(&p, gamma_stoch, 1.0 / (gamma_stoch * n as f64), n)?,
        bound_th2(&p, gamma, lambda, n)?,
        bound_cor1(&p, gamma, n)?,
        bound_th3(&p, gamma, lambda, n, &pairs)?,
        bound_cor2(&p, gamma, n, &pairs)?,
        bound_av_tighter(&p, gamma, n, &pairs)?,
    ];
    for b in &bounds {
        let parts: Vec<String> = b.components.iter().map(|(k, v)| format!("{k} {v:.3e}")).collect();
        let argmin = b.argmin.map(|(r, b)| format!(" at (r, b) = ({r}, {b})")).unwrap_or_default();
        println!("{:<22} {:>10.4e}  [{}]{argmin}", b.theorem, b.total, parts.join(", "));
    }
    Ok(())
}
