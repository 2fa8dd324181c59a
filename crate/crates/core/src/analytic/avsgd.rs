//! Exact risk of averaged regularized SGD (no momentum) in closed form.
//!
//! With δ = 0 the impulse response is xⱼ = qʲ with q = 1 − a, so
//! uₖ = (1 − qᵏ)/a and Σ_{m=1}^{n}(1 − qᵐ)² = n − 2S(q) + S(q²) with
//! S(q) = Σ_{m=1}^{n} qᵐ.

use super::{check_checkpoints, AnalyticResult, RowAccumulator, TransferSystem};
use crate::error::Result;
use crate::problems::SpectralProblem;
use crate::solvers::SolverConfig;

/// 1 − qᵏ with q = 1 − a, accurate for small a.
fn one_minus_pow(a: f64, k: f64) -> f64 {
    if a >= 1.0 {
        return if k == 0.0 { 0.0 } else { 1.0 };
    }
    -(k * (-a).ln_1p()).exp_m1()
}

/// Exact E f(θ̄ₙ) − f(θ*) of averaged SGD at each checkpoint. The momentum in
/// `cfg` is ignored.
pub fn exact_avsgd_risk(problem: &SpectralProblem, cfg: &SolverConfig, checkpoints: &[usize]) -> Result<AnalyticResult> {
    check_checkpoints(checkpoints)?;
    let mut plain = cfg.clone();
    plain.delta = 0.0;
    plain.algorithm = crate::solvers::Algorithm::AvGD;
    let sys = TransferSystem::new(problem, &plain)?;
    let mut acc = RowAccumulator::new(checkpoints.len());
    for c in &sys.components {
        let a = c.a;
        for (idx, &n) in checkpoints.iter().enumerate() {
            let nf = n as f64;
            let np1 = nf + 1.0;
            // S(q) = q(1 − qⁿ)/a and S(q²) = q²(1 − q²ⁿ)/(1 − q²).
            let q = 1.0 - a;
            let s_q = q * one_minus_pow(a, nf) / a;
            let a2 = a * (2.0 - a);
            let s_q2 = if a2 >= 1.0 { 0.0 } else { q * q * one_minus_pow(a2, nf) / a2 };
            let var = (nf - 2.0 * s_q + s_q2) / (a * a);
            let m_opt = c.delta_tilde * one_minus_pow(a, np1) / (a * np1);
            acc.add(idx, c, sys.gamma, m_opt, var, np1);
        }
    }
    Ok(acc.finish("avsgd", checkpoints))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Spectrum;
    use crate::solvers::Algorithm;

    #[test]
    fn unit_step_single_component() {
        let p = SpectralProblem::new("t", 0, Spectrum::new(vec![1.0]).unwrap(), vec![0.0].into(), vec![1.0].into(), 0.0, 0.0, 3.0).unwrap();
        let cfg = SolverConfig::new(Algorithm::AvGD, 1.0, 0.0, 0.0, 30);
        let cps: Vec<usize> = (0..=30).collect();
        let res = exact_avsgd_risk(&p, &cfg, &cps).unwrap();
        for row in &res.rows {
            let n = row.n as f64 + 1.0;
            assert!((row.exact_risk - 0.5 / (n * n)).abs() < 1e-16);
        }
    }

    #[test]
    fn small_step_stability() {
        // 1 − (1 − a)ᵏ = ka − k(k−1)a²/2 + O(k³a³).
        let want = 1e-8 - 0.5 * 1e4 * (1e4 - 1.0) * 1e-24;
        assert!((one_minus_pow(1e-12, 1e4) - want).abs() < 1e-14 * want);
        assert_eq!(one_minus_pow(1.0, 3.0), 1.0);
    }
}
