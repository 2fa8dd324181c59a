//! Builds the three synthetic problem families, inspects their constants and
//! round-trips one through JSON.
//!
//! Run with `cargo run --example problem_generation`.

use lsq_accel::problems::{effective_constants, make_fig1_problem, make_random_problem, make_source_problem, required_dimension};
use lsq_accel::{Result, SourceCondition, SpectralProblem};

fn main() -> Result<()> {
    // Spectrum sᵢ = 1/i³ with a random unit displacement, as in the Figure 1 experiments.
    let fig1 = make_fig1_problem(25, 0)?;
    let c = effective_constants(&fig1);
    println!("fig1: d = {}, tr Σ = {:.4}, R² = {:.4}, L = {}", fig1.dim(), fig1.spectrum.trace(), c.r2, c.l);
    println!("      largest additive step 1/L = {}, largest stochastic step 1/(2R²) = {:.4}", c.gamma_max_additive, c.gamma_max_stochastic);

    // Power-law spectrum with a prescribed source exponent r and capacity b.
    let (b, r) = (0.5, 0.4);
    let (src, cond) = make_source_problem(2000, b, r, 1)?;
    println!("source: d = {}, tr Σᵇ = {:.3}, ‖Σ^(r/2)Δ₀‖² = {:.3}", src.dim(), cond.trace_b, cond.norm_r);
    println!("        a tail below 1e-6 needs d >= {}", required_dimension(b, r, 1e-6));

    // The same source condition evaluated on any problem.
    let other = SourceCondition::of(&fig1, 0.0, 1.0)?;
    println!("fig1 at (r, b) = (0, 1): tr Σ = {:.4}, ‖Δ₀‖² = {:.4}", other.trace_b, other.norm_r);

    // Random problems carry noise and may be rotated; JSON keeps every bit.
    let random = make_random_problem(4, 7)?.with_rotation(11);
    let text = random.to_json()?;
    let back = SpectralProblem::from_json(&text)?;
    assert_eq!(random, back);
    println!("random: σ² = {:.3}, τ² = {:.3}, rotated = {}, JSON bytes = {}", back.sigma2, back.tau2, back.rotation.is_some(), text.len());
    Ok(())
}
