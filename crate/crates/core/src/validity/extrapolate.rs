use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fit `rho(p) = rho_inf + c e^{-gamma p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub rho_inf: f64,
    pub c: f64,
    pub gamma: f64,
    pub rms: f64,
}

/// Extrapolates a sequence of radius estimates to infinite order.
///
/// Successive pairs are averaged first to damp even/odd oscillations. For
/// each trial `gamma` the model is linear in `(rho_inf, c)`, so `gamma` is
/// chosen by a log-spaced scan followed by golden-section refinement.
pub fn extrapolate(points: &[(f64, f64)]) -> Result<Extrapolation> {
    if points.len() < 4 {
        return Err(Error::Config("extrapolation needs at least four points".into()));
    }
    let avg: Vec<(f64, f64)> = points
        .windows(2)
        .map(|w| (0.5 * (w[0].0 + w[1].0), 0.5 * (w[0].1 + w[1].1)))
        .collect();
    let fit = |gamma: f64| -> (f64, f64, f64) {
        let n = avg.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(p, y) in &avg {
            let x = (-gamma * p).exp();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let det = n * sxx - sx * sx;
        if det.abs() < 1e-300 {
            return (f64::INFINITY, 0.0, 0.0);
        }
        let c = (n * sxy - sx * sy) / det;
        let r0 = (sy - c * sx) / n;
        let rss: f64 = avg
            .iter()
            .map(|&(p, y)| (y - r0 - c * (-gamma * p).exp()).powi(2))
            .sum();
        (rss, r0, c)
    };
    let grid: Vec<f64> = (0..400).map(|k| 10f64.powf(-3.0 + 3.5 * k as f64 / 399.0)).collect();
    let k = (0..grid.len())
        .min_by(|&a, &b| fit(grid[a]).0.partial_cmp(&fit(grid[b]).0).unwrap())
        .unwrap();
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if fit(x1).0 < fit(x2).0 {
            b = x2;
        } else {
            a = x1;
        }
    }
    let gamma = 0.5 * (a + b);
    let (rss, rho_inf, c) = fit(gamma);
    if !rho_inf.is_finite() {
        return Err(Error::Numerical("extrapolation fit failed".into()));
    }
    Ok(Extrapolation { rho_inf, c, gamma, rms: (rss / avg.len() as f64).sqrt() })
}
