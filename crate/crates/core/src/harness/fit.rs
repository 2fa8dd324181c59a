//! Log-log rate fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of points a fit window must contain.
pub const MIN_FIT_POINTS: usize = 5;

/// Least-squares line through (log n, log risk).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    /// Intercept in natural-log units.
    pub intercept: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Coefficient of determination of the fit.
    pub r_squared: f64,
    pub points: usize,
}

/// Default window: everything after the first decade of iterations.
pub fn default_window(curve: &[(usize, f64)]) -> (usize, usize) {
    let n_max = curve.iter().map(|c| c.0).max().unwrap_or(0);
    (10, n_max)
}

/// Fits log(risk) = intercept + slope·log(n) on the points with n in `window`.
pub fn fit_rate(curve: &[(usize, f64)], window: (usize, usize)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = curve.iter().filter(|(n, _)| *n >= window.0.max(1) && *n <= window.1).map(|&(n, r)| (n as f64, r)).collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::Window(format!(
            "window [{}, {}] holds {} points, at least {MIN_FIT_POINTS} are needed",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if let Some(bad) = pts.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(Error::Window(format!("risk {} at n = {} is not positive", bad.1, bad.0)));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Window("all points share the same n".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(RateFit {
        slope,
        intercept,
        n_min: pts.first().map_or(0, |p| p.0 as usize),
        n_max: pts.last().map_or(0, |p| p.0 as usize),
        r_squared: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::log_checkpoints;

    #[test]
    fn synthetic_power_laws() {
        let grid = log_checkpoints(10_000, 25);
        let c2: Vec<(usize, f64)> = grid.iter().map(|&n| (n, 3.0 / (n as f64).powi(2))).collect();
        let f = fit_rate(&c2, (10, 10_000)).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-6);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-6);
        let c1: Vec<(usize, f64)> = grid.iter().map(|&n| (n, 0.5 / n as f64)).collect();
        assert!((fit_rate(&c1, default_window(&c1)).unwrap().slope + 1.0).abs() < 1e-9);
    }

    #[test]
    fn window_errors() {
        let c: Vec<(usize, f64)> = (1..=20).map(|n| (n, 1.0 / n as f64)).collect();
        assert!(matches!(fit_rate(&c, (1, 3)), Err(Error::Window(_))));
        let mut z = c.clone();
        z[10].1 = 0.0;
        assert!(matches!(fit_rate(&z, (1, 20)), Err(Error::Window(_))));
    }
}
