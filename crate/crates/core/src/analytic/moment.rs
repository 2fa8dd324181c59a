//! Exact risk by direct propagation of the impulse response.

use super::{check_checkpoints, AnalyticResult, RowAccumulator, TransferSystem};
use crate::error::Result;
use crate::problems::SpectralProblem;
use crate::solvers::SolverConfig;

/// Components processed together; interleaving independent recursions lets the
/// CPU overlap their dependency chains.
const LANES: usize = 64;

/// Exact E f(θ̄ₙ) − f(θ*) of the (accelerated) recursion at each checkpoint.
///
/// Cost is O(d · max checkpoint). Valid for every momentum, including δ = 0 and
/// the real-root regime the closed forms do not cover.
pub fn exact_acc_risk_moment(problem: &SpectralProblem, cfg: &SolverConfig, checkpoints: &[usize]) -> Result<AnalyticResult> {
    check_checkpoints(checkpoints)?;
    let sys = TransferSystem::new(problem, cfg)?;
    let mut acc = RowAccumulator::new(checkpoints.len());
    let Some(&n_max) = checkpoints.last() else {
        return Ok(acc.finish("moment", checkpoints));
    };
    let delta = sys.delta;
    for chunk in sys.components.chunks(LANES) {
        let w = chunk.len();
        let c1: Vec<f64> = chunk.iter().map(|c| (1.0 + delta) * c.t).collect();
        let c2: Vec<f64> = chunk.iter().map(|c| delta * c.t).collect();
        let mut x = vec![1.0; w];
        let mut xp = vec![0.0; w];
        let mut u = vec![0.0; w];
        let mut var = vec![0.0; w];
        let mut next_cp = 0;
        for k in 0..=n_max {
            // Invariant: u = u_k, var = Σ_{m=1}^{k} u_m², x = x_k, xp = x_{k-1}.
            if checkpoints[next_cp] == k {
                let np1 = (k + 1) as f64;
                for l in 0..w {
                    let u_next = u[l] + x[l];
                    let m_opt = chunk[l].delta_tilde * (u_next - c2[l] * u[l]) / np1;
                    acc.add(next_cp, &chunk[l], sys.gamma, m_opt, var[l], np1);
                }
                next_cp += 1;
                if next_cp == checkpoints.len() {
                    break;
                }
            }
            for l in 0..w {
                let u_next = u[l] + x[l];
                var[l] += u_next * u_next;
                let x_next = c1[l] * x[l] - c2[l] * xp[l];
                xp[l] = x[l];
                x[l] = x_next;
                u[l] = u_next;
            }
        }
    }
    Ok(acc.finish("moment", checkpoints))
}
