//! Full-order reference solutions: time integration, exact conservative
//! Duffing periods and shooting for periodic forced responses.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ForcingSpec, QuadSystem};

/// Real physical ODE of a quadratic system, with the algebraic rows solved
/// for at every evaluation.
#[derive(Clone, Debug)]
pub struct FullOrder {
    np: usize,
    na: usize,
    a: DMatrix<f64>,
    b_inv: DMatrix<f64>,
    /// Inverse of the algebraic diagonal block.
    aa_inv: DMatrix<f64>,
    /// Algebraic rows are quadratic in physical variables only.
    explicit: bool,
    q: Vec<(usize, usize, usize, f64)>,
    forcing: Option<ForcingSpec>,
}

impl FullOrder {
    /// Uses the base system and, if present, its harmonic forcing.
    pub fn new(sys: &QuadSystem) -> Result<FullOrder> {
        if !sys.is_real() {
            return Err(Error::InvalidSystem("reference integration needs a real system".into()));
        }
        let base = sys.base();
        let n = base.dim();
        let np = base.n_physical();
        let na = n - np;
        let a = DMatrix::from_fn(n, n, |i, j| base.a()[(i, j)].re);
        let b_inv = DMatrix::from_fn(np, np, |i, j| base.b()[(i, j)].re)
            .try_inverse()
            .ok_or_else(|| Error::InvalidSystem("singular mass block".into()))?;
        let aa_inv = a
            .view((np, np), (na, na))
            .into_owned()
            .try_inverse()
            .ok_or_else(|| Error::InvalidSystem("singular algebraic block".into()))?;
        let q: Vec<_> = sys
            .q()
            .entries()
            .iter()
            .filter(|e| e.i < n)
            .map(|e| (e.i, e.j, e.k, e.v.re))
            .collect();
        let explicit = q.iter().all(|&(i, j, k, _)| i < np || (j < np && k < np));
        Ok(FullOrder { np, na, a, b_inv, aa_inv, explicit, q, forcing: sys.forcing().cloned() })
    }

    /// Same system with the forcing frequency replaced.
    pub fn with_omega(mut self, omega: f64) -> Self {
        if let Some(f) = self.forcing.as_mut() {
            f.omega = omega;
        }
        self
    }

    pub fn n_physical(&self) -> usize {
        self.np
    }

    pub fn forcing(&self) -> Option<&ForcingSpec> {
        self.forcing.as_ref()
    }

    /// Residual of the algebraic rows and its Jacobian in the algebraic variables.
    fn algebraic_residual(&self, y: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (np, na) = (self.np, self.na);
        let mut g = DVector::from_fn(na, |r, _| (0..y.len()).map(|j| self.a[(np + r, j)] * y[j]).sum());
        let mut jac = self.a.view((np, np), (na, na)).into_owned();
        for &(i, j, k, v) in &self.q {
            if i >= np {
                g[i - np] += v * y[j] * y[k];
                if j >= np {
                    jac[(i - np, j - np)] += v * y[k];
                }
                if k >= np {
                    jac[(i - np, k - np)] += v * y[j];
                }
            }
        }
        (g, jac)
    }

    /// Complete state. Explicit recasts are solved in one step; otherwise
    /// Newton starts from that explicit guess.
    pub fn full_state(&self, yp: &[f64]) -> Result<Vec<f64>> {
        let (np, na) = (self.np, self.na);
        let mut y = yp.to_vec();
        y.resize(np + na, 0.0);
        if na == 0 {
            return Ok(y);
        }
        let (g, _) = self.algebraic_residual(&y);
        let step = &self.aa_inv * g;
        for r in 0..na {
            y[np + r] -= step[r];
        }
        if self.explicit {
            return Ok(y);
        }
        for _ in 0..30 {
            let (g, jac) = self.algebraic_residual(&y);
            let step = jac
                .lu()
                .solve(&g)
                .ok_or_else(|| Error::Numerical("singular algebraic block".into()))?;
            for r in 0..na {
                y[np + r] -= step[r];
            }
            let size = y[np..].iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if step.amax() <= 1e-15 * size {
                return Ok(y);
            }
        }
        Err(Error::Numerical("algebraic elimination did not converge".into()))
    }

    /// Physical derivative at time `t`.
    pub fn rhs(&self, t: f64, yp: &[f64]) -> Result<Vec<f64>> {
        let y = self.full_state(yp)?;
        let np = self.np;
        let mut r: Vec<f64> = (0..np).map(|i| (0..y.len()).map(|j| self.a[(i, j)] * y[j]).sum()).collect();
        for &(i, j, k, v) in &self.q {
            if i < np {
                r[i] += v * y[j] * y[k];
            }
        }
        if let Some(f) = &self.forcing {
            let (c, s) = ((f.omega * t).cos(), (f.omega * t).sin());
            for i in 0..np {
                r[i] += f.kappa * (f.fc[i] * c + f.fs[i] * s);
            }
        }
        Ok((0..np).map(|i| (0..np).map(|j| self.b_inv[(i, j)] * r[j]).sum()).collect())
    }
}

/// Output of [`integrate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// Physical states at `t`.
    pub y: Vec<Vec<f64>>,
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth minus fourth order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 200_000;

/// Dormand-Prince 5(4) from `t0`, reporting the state at each of `times`
/// (increasing, all `>= t0`). Relative and absolute tolerances both equal `tol`.
pub fn integrate(fo: &FullOrder, t0: f64, y0: &[f64], times: &[f64], tol: f64) -> Result<Trajectory> {
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    k[0] = fo.rhs(t, &y)?;
    let span = times.last().map_or(0.0, |&e| e - t0);
    let mut h = (span * 1e-3).max(1e-6).min(0.1);
    let mut out = Trajectory { t: Vec::with_capacity(times.len()), y: Vec::with_capacity(times.len()), accepted: 0, rejected: 0 };
    let mut tmp = vec![0.0; n];
    for &target in times {
        while t < target {
            let last = target - t <= h;
            let step = if last { target - t } else { h };
            for s in 1..7 {
                for i in 0..n {
                    tmp[i] = y[i] + step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                k[s] = fo.rhs(t + C[s] * step, &tmp)?;
            }
            // tmp holds the fifth-order solution (FSAL).
            let mut err = 0.0;
            for i in 0..n {
                let e = step * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let sc = tol + tol * y[i].abs().max(tmp[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y.copy_from_slice(&tmp);
                k[0] = k[6].clone();
                out.accepted += 1;
            } else {
                out.rejected += 1;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(last && err <= 1.0) {
                h = step * fac;
            }
            if out.accepted + out.rejected > MAX_STEPS {
                return Err(Error::Numerical(format!("step budget exhausted at t = {t}")));
            }
            if h < 1e-14 * t.abs().max(1.0) || !h.is_finite() {
                return Err(Error::Numerical(format!("step size collapsed at t = {t}")));
            }
        }
        out.t.push(target);
        out.y.push(y.clone());
    }
    Ok(out)
}

/// State after time `dt`.
pub fn flow(fo: &FullOrder, t0: f64, y0: &[f64], dt: f64, tol: f64) -> Result<Vec<f64>> {
    Ok(integrate(fo, t0, y0, &[t0 + dt], tol)?.y.pop().unwrap_or_else(|| y0.to_vec()))
}

/// Exact angular frequency of `u'' + omega^2 u + h u^3 = 0` at amplitude `a`,
/// from the period written as a smooth periodic integral in the angle `psi`
/// with `u = a sin(psi)`; the trapezoid rule is refined until it stabilises.
pub fn duffing_frequency(omega: f64, h: f64, a: f64) -> Result<f64> {
    let g = |psi: f64| 1.0 / (omega * omega + 0.5 * h * a * a * (1.0 + psi.sin().powi(2))).sqrt();
    if omega * omega + h * a * a <= 0.0 || omega * omega + 0.5 * h * a * a <= 0.0 {
        return Err(Error::Config(format!("amplitude {a} is not an oscillatory level")));
    }
    if h < 0.0 && a * a >= -omega * omega / h {
        return Err(Error::Config(format!("amplitude {a} is beyond the potential barrier")));
    }
    // Average of g over a full period equals the quarter-period integral over pi/2.
    let mut n = 16;
    let mut prev = f64::NAN;
    loop {
        let mean = (0..n).map(|j| g(2.0 * PI * j as f64 / n as f64)).sum::<f64>() / n as f64;
        if (mean - prev).abs() <= 1e-15 * mean || n > 1 << 20 {
            let period = 2.0 * PI * mean;
            return Ok(2.0 * PI / period);
        }
        prev = mean;
        n *= 2;
    }
}

/// A periodic orbit found by shooting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingPoint {
    pub omega: f64,
    /// Largest `|u|` of the displacement row over one period.
    pub amplitude: f64,
    pub stable: bool,
    /// Physical state at `t = 0`.
    pub state: Vec<f64>,
}

/// Controls of the shooting solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// Response period is `2 pi m / Omega`.
    pub m: u32,
    pub tol: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Samples per period used for the amplitude.
    pub samples: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions { m: 1, tol: 1e-11, newton_tol: 1e-9, max_iter: 30, samples: 256 }
    }
}

fn monodromy(fo: &FullOrder, y: &[f64], period: f64, tol: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = y.len();
    let phi = flow(fo, 0.0, y, period, tol)?;
    let cols: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let h = 1e-6 * y[j].abs().max(1e-2);
            let (mut yp, mut ym) = (y.to_vec(), y.to_vec());
            yp[j] += h;
            ym[j] -= h;
            let (fp, fm) = (flow(fo, 0.0, &yp, period, tol)?, flow(fo, 0.0, &ym, period, tol)?);
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (j, col) in cols.into_iter().enumerate() {
        m.set_column(j, &DVector::from_vec(col?));
    }
    Ok((phi, m))
}

/// Newton on the period map from `guess`.
pub fn shoot(fo: &FullOrder, guess: &[f64], opts: &ShootingOptions) -> Result<ShootingPoint> {
    let f = fo.forcing().ok_or_else(|| Error::Config("shooting needs a forced system".into()))?;
    let omega = f.omega;
    let period = 2.0 * PI * opts.m as f64 / omega;
    let n = guess.len();
    let mut y = guess.to_vec();
    for _ in 0..opts.max_iter {
        let (phi, m) = monodromy(fo, &y, period, opts.tol)?;
        let r = DVector::from_iterator(n, phi.iter().zip(&y).map(|(a, b)| a - b));
        let jac = &m - DMatrix::identity(n, n);
        let dy = jac
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::Numerical("singular shooting Jacobian".into()))?;
        let size = 1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let damp = (0.5 * size / dy.amax()).min(1.0);
        for i in 0..n {
            y[i] -= damp * dy[i];
        }
        if damp == 1.0 && dy.amax() <= opts.newton_tol * (1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
            let (_, m) = monodromy(fo, &y, period, opts.tol)?;
            let stable = m.complex_eigenvalues().iter().all(|z| z.norm() < 1.0);
            let times: Vec<f64> = (1..=opts.samples).map(|k| period * k as f64 / opts.samples as f64).collect();
            let traj = integrate(fo, 0.0, &y, &times, opts.tol)?;
            let amplitude = traj.y.iter().map(|s| s[0].abs()).fold(y[0].abs(), f64::max);
            return Ok(ShootingPoint { omega, amplitude, stable, state: y });
        }
        if !y.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    Err(Error::Numerical(format!("shooting did not converge at Omega = {omega}")))
}

/// Reference response curve: sweeps `omegas` upwards and downwards with warm
/// starts, then seeds between two distinct solutions to reach the middle
/// branch. Each entry holds the distinct orbits found at that frequency.
pub fn shooting_frc(sys: &QuadSystem, omegas: &[f64], opts: &ShootingOptions) -> Result<Vec<Vec<ShootingPoint>>> {
    let fo = FullOrder::new(sys)?;
    if fo.forcing().is_none() {
        return Err(Error::Config("shooting needs a forced system".into()));
    }
    let np = fo.n_physical();
    let sweep = |order: Vec<usize>| -> Vec<Option<ShootingPoint>> {
        let mut out = vec![None; omegas.len()];
        let mut guess = vec![0.0; np];
        for i in order {
            let f = fo.clone().with_omega(omegas[i]);
            match shoot(&f, &guess, opts) {
                Ok(p) => {
                    guess = p.state.clone();
                    out[i] = Some(p);
                }
                Err(_) => guess = vec![0.0; np],
            }
        }
        out
    };
    let (up, down) = rayon::join(
        || sweep((0..omegas.len()).collect()),
        || sweep((0..omegas.len()).rev().collect()),
    );
    let same = |a: &ShootingPoint, b: &ShootingPoint| {
        a.state.iter().zip(&b.state).all(|(x, y)| (x - y).abs() <= 1e-6 * (1.0 + x.abs()))
    };
    Ok((0..omegas.len())
        .into_par_iter()
        .map(|i| {
            let mut pts: Vec<ShootingPoint> = Vec::new();
            for p in [&up[i], &down[i]].into_iter().flatten() {
                if !pts.iter().any(|q| same(p, q)) {
                    pts.push(p.clone());
                }
            }
            if pts.len() == 2 {
                let mid: Vec<f64> = pts[0].state.iter().zip(&pts[1].state).map(|(a, b)| 0.5 * (a + b)).collect();
                if let Ok(p) = shoot(&fo.clone().with_omega(omegas[i]), &mid, opts) {
                    if !pts.iter().any(|q| same(&p, q)) {
                        pts.push(p);
                    }
                }
            }
            pts.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
            pts
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::duffing;

    #[test]
    fn linear_oscillator_returns_after_one_period() {
        let fo = FullOrder::new(&duffing(1.5, 0.0, 0.0)).unwrap();
        let y = flow(&fo, 0.0, &[0.3, 0.1], 2.0 * PI / 1.5, 1e-12).unwrap();
        assert!((y[0] - 0.3).abs() < 1e-9 && (y[1] - 0.1).abs() < 1e-9);
    }

    #[test]
    fn algebraic_rows_are_eliminated() {
        let fo = FullOrder::new(&duffing(1.5, 0.0, 1.0)).unwrap();
        let y = fo.full_state(&[0.7, 0.0]).unwrap();
        assert!((y[2] - 0.49).abs() < 1e-15);
    }

    #[test]
    fn quadrature_limits() {
        assert!((duffing_frequency(1.5, 0.0, 0.8).unwrap() - 1.5).abs() < 1e-14);
        let a = 0.05;
        let w = duffing_frequency(1.5, 1.0, a).unwrap();
        assert!((w - (1.5 + 3.0 * a * a / 12.0)).abs() < 1e-6);
        assert!(duffing_frequency(1.0, -1.0, 1.2).is_err());
    }
}
