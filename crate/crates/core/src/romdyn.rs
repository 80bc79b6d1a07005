//! Reduced dynamics on the polar slice: backbone curves, forced responses as
//! fixed points of the amplitude/phase system, and a-priori forcing limits.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::parametrisation::{Evaluator, Parametrisation, Style};
use crate::validity::{polar_point, u_max, AngleGrid};

/// One point of a backbone curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackbonePoint {
    pub rho: f64,
    pub omega_nl: f64,
    pub u_max: f64,
}

/// Steady forced response: a fixed point of `(rho', phi')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarFixedPoint {
    pub omega: f64,
    pub rho: f64,
    pub phi: f64,
    pub stable: bool,
    pub u_max: f64,
}

/// `G = 2 e^{-i theta} f_1(z)`; `rho' = Re G` and `rho theta' = Im G`.
fn polar_g(ev: &Evaluator, par: &Parametrisation, rho: f64, theta: f64, phi: f64) -> C64 {
    let mut z = polar_point(par.dim(), par.ratio(), rho, theta, phi);
    if !par.is_forced() && z.len() < par.dim() {
        z.resize(par.dim(), C64::new(0.0, 0.0));
    }
    2.0 * C64::from_polar(1.0, -theta) * ev.f(&z)[0]
}

/// Backbone `omega_NL(rho) = Im G / rho` of an autonomous normal form, with
/// `u_max` evaluated at `eval_order`.
///
/// Fails with [`Error::NotNormalForm`] when the frequency depends on the
/// angle, which happens for graph-style expansions.
pub fn backbone(par: &Parametrisation, rhos: &[f64], eval_order: usize) -> Result<Vec<BackbonePoint>> {
    if par.is_forced() {
        return Err(Error::Config("backbone needs an autonomous parametrisation".into()));
    }
    let ev = par.evaluator(par.order());
    let grid = AngleGrid { thetas: vec![], phis: vec![0.0] };
    rhos.par_iter()
        .map(|&rho| {
            let g0 = polar_g(&ev, par, rho, 0.0, 0.0);
            for theta in [0.7, 2.1, 4.4] {
                let g = polar_g(&ev, par, rho, theta, 0.0);
                if (g - g0).norm() > 1e-8 * g0.norm().max(1e-300) {
                    return Err(Error::NotNormalForm);
                }
            }
            Ok(BackbonePoint {
                rho,
                omega_nl: g0.im / rho,
                u_max: u_max(par, rho, &grid, par.system().displacement_row(), eval_order),
            })
        })
        .collect()
}

/// Controls of the fixed-point search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrcOptions {
    /// Seeds span `(0, rho_max]`; roots beyond are discarded.
    pub rho_max: f64,
    pub seeds_rho: usize,
    pub seeds_phi: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub eval_order: usize,
}

impl FrcOptions {
    pub fn for_par(par: &Parametrisation) -> Self {
        FrcOptions {
            rho_max: 3.0 * par.radius_scale(),
            seeds_rho: 8,
            seeds_phi: 8,
            tol: 1e-10,
            max_iter: 60,
            eval_order: par.order(),
        }
    }
}

/// Amplitude/phase system of a forced normal form at excitation `omega`:
/// `rho' = Re G`, `phi' = (m/n) Im G / rho - omega`, written with the phase
/// equation multiplied by `rho`.
struct PolarSystem<'a> {
    ev: &'a Evaluator,
    par: &'a Parametrisation,
    omega: f64,
}

impl PolarSystem<'_> {
    fn residual(&self, rho: f64, phi: f64) -> [f64; 2] {
        let g = polar_g(self.ev, self.par, rho, 0.0, phi);
        let n_over_m = 1.0 / self.par.ratio().value();
        [g.re, g.im - rho * n_over_m * self.omega]
    }

    fn jacobian(&self, rho: f64, phi: f64) -> [[f64; 2]; 2] {
        let hr = 1e-7 * rho.abs().max(1e-3);
        let hp = 1e-7;
        let (a, b) = (self.residual(rho + hr, phi), self.residual(rho - hr, phi));
        let (c, d) = (self.residual(rho, phi + hp), self.residual(rho, phi - hp));
        [
            [(a[0] - b[0]) / (2.0 * hr), (c[0] - d[0]) / (2.0 * hp)],
            [(a[1] - b[1]) / (2.0 * hr), (c[1] - d[1]) / (2.0 * hp)],
        ]
    }

    fn newton(&self, mut rho: f64, mut phi: f64, opts: &FrcOptions) -> Option<(f64, f64)> {
        for _ in 0..opts.max_iter {
            let r = self.residual(rho, phi);
            let j = self.jacobian(rho, phi);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let dr = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
            let dp = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
            let mut t = 1.0;
            while rho - t * dr <= 0.0 {
                t *= 0.5;
            }
            rho -= t * dr;
            phi -= t * dp;
            if !rho.is_finite() || rho > 2.0 * opts.rho_max {
                return None;
            }
            if (t * dr).abs() <= opts.tol * rho.max(1.0) && (t * dp).abs() <= opts.tol {
                let r = self.residual(rho, phi);
                let scale = 1.0 + rho;
                return (r[0].hypot(r[1]) <= 1e-8 * scale && rho <= opts.rho_max)
                    .then(|| (rho, phi.rem_euclid(2.0 * PI)));
            }
        }
        None
    }

    /// Stability of `(rho', phi')`; the phase row of the residual is `rho phi'`
    /// up to the factor `m/n`, which leaves the signs of trace and determinant
    /// unchanged at a fixed point.
    fn stable(&self, rho: f64, phi: f64) -> bool {
        let j = self.jacobian(rho, phi);
        let r = self.par.ratio().value() / rho;
        let (a, b, c, d) = (j[0][0], j[0][1], r * j[1][0], r * j[1][1]);
        a + d < 0.0 && a * d - b * c > 0.0
    }
}

/// Forced response over `omegas`, with coefficients frozen at the expansion
/// frequency. Each entry lists the distinct fixed points found at that
/// frequency, sorted by amplitude.
pub fn frc(par: &Parametrisation, omegas: &[f64], opts: &FrcOptions) -> Result<Vec<Vec<PolarFixedPoint>>> {
    if !par.is_forced() {
        return Err(Error::Config("forced response needs a forced parametrisation".into()));
    }
    if par.style() != Style::Cnf {
        return Err(Error::NotNormalForm);
    }
    let ev = par.evaluator(par.order());
    let row = par.system().displacement_row();
    Ok(omegas
        .par_iter()
        .map(|&omega| {
            let sys = PolarSystem { ev: &ev, par, omega };
            let mut found: Vec<(f64, f64)> = Vec::new();
            for i in 0..opts.seeds_rho {
                let rho0 = opts.rho_max * (i as f64 + 0.5) / opts.seeds_rho as f64;
                for k in 0..opts.seeds_phi {
                    let phi0 = 2.0 * PI * k as f64 / opts.seeds_phi as f64;
                    if let Some((r, p)) = sys.newton(rho0, phi0, opts) {
                        let dup = found.iter().any(|&(r2, p2)| {
                            let dp = (p - p2).rem_euclid(2.0 * PI);
                            (r - r2).abs().hypot(dp.min(2.0 * PI - dp)) < 1e-6
                        });
                        if !dup {
                            found.push((r, p));
                        }
                    }
                }
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0));
            found
                .into_iter()
                .map(|(rho, phi)| PolarFixedPoint {
                    omega,
                    rho,
                    phi,
                    stable: sys.stable(rho, phi),
                    u_max: u_max(par, rho, &AngleGrid { thetas: vec![], phis: vec![phi] }, row, opts.eval_order),
                })
                .collect()
        })
        .collect())
}

/// Leading reduced-dynamics coefficients of a primary resonance:
/// `z1' = f1 z1 + f2 z1^2 z2 + c3 kappa z3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericRom {
    pub f1: C64,
    pub f2: C64,
    /// Forcing coefficient per unit amplitude.
    pub c3: C64,
}

/// Which part of `c3` carries the forcing in the closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForcingBranch {
    Real,
    Imaginary,
}

impl GenericRom {
    /// Reads `f1`, `f2` and `f3 / kappa` from a forced normal form. `f1` must
    /// match the master eigenvalue.
    pub fn extract(par: &Parametrisation) -> Result<GenericRom> {
        if !par.is_forced() || par.order() < 3 || par.order_na() < 1 {
            return Err(Error::Config("needs a forced expansion of order 3 or more".into()));
        }
        if par.style() != Style::Cnf {
            return Err(Error::NotNormalForm);
        }
        let kappa = par.system().forcing().map(|f| f.kappa).unwrap_or(0.0);
        if kappa == 0.0 {
            return Err(Error::Config("zero forcing amplitude".into()));
        }
        let f1 = par.f_coefficient(&[1, 0, 0, 0], 0);
        let lambda = par.master().lambda;
        if (f1 - lambda).norm() > 1e-8 * lambda.norm() {
            return Err(Error::Numerical(format!("linear coefficient {f1} differs from eigenvalue {lambda}")));
        }
        Ok(GenericRom {
            f1,
            f2: par.f_coefficient(&[2, 1, 0, 0], 0),
            c3: par.f_coefficient(&[0, 0, 1, 0], 0) / kappa,
        })
    }

    pub fn branch(&self) -> ForcingBranch {
        if self.c3.re.abs() >= self.c3.im.abs() {
            ForcingBranch::Real
        } else {
            ForcingBranch::Imaginary
        }
    }

    /// Largest forcing whose response peak stays at `rho_limit`.
    pub fn max_forcing(&self, rho_limit: f64) -> Result<f64> {
        if !(rho_limit > 0.0) {
            return Err(Error::Config("rho limit must be positive".into()));
        }
        let num = 2.0 * self.f1.re * rho_limit + self.f2.re * rho_limit.powi(3) / 2.0;
        let den = match self.branch() {
            _ if self.c3.norm() == 0.0 => return Err(Error::Config("forcing coefficient vanishes".into())),
            ForcingBranch::Real => 4.0 * self.c3.re * (1.0 + (self.c3.im / self.c3.re).powi(2)).sqrt(),
            ForcingBranch::Imaginary => 4.0 * self.c3.im * (1.0 + (self.c3.re / self.c3.im).powi(2)).sqrt(),
        };
        Ok((num / den).abs())
    }

    /// Right-hand side `(rho', rho phi')` of the truncated system at
    /// excitation `omega`.
    pub fn polar_rhs(&self, rho: f64, phi: f64, omega: f64, kappa: f64) -> [f64; 2] {
        let (f1, f2, f3) = (self.f1, self.f2, self.c3 * kappa);
        let r3 = rho.powi(3) / 4.0;
        [
            f1.re * rho + f2.re * r3 + 2.0 * f3.re * phi.cos() + 2.0 * f3.im * phi.sin(),
            (f1.im - omega) * rho + f2.im * r3 + 2.0 * f3.im * phi.cos() - 2.0 * f3.re * phi.sin(),
        ]
    }

    /// `(sin phi, cos phi)` of a truncated fixed point at amplitude `rho`.
    pub fn phase_of(&self, rho: f64, omega: f64, kappa: f64) -> (f64, f64) {
        let (f1, f2, f3) = (self.f1, self.f2, self.c3 * kappa);
        let r3 = rho.powi(3) / 4.0;
        let p = f1.re * rho + f2.re * r3;
        let q = (f1.im - omega) * rho + f2.im * r3;
        let den = 2.0 * f3.norm_sqr();
        ((f3.re * q - f3.im * p) / den, -(f3.re * p + f3.im * q) / den)
    }

    /// Coefficients `(a, b, c)` of the quadratic in `omega` whose roots are the
    /// two excitation frequencies giving response amplitude `rho`.
    pub fn omega_quadratic(&self, rho: f64, kappa: f64) -> (f64, f64, f64) {
        let (f1, f2) = (self.f1, self.f2);
        let r2 = rho * rho;
        let a = r2;
        let b = -2.0 * f1.im * r2 - f2.im * r2 * r2 / 2.0;
        let c = f1.norm_sqr() * r2 + (f1.im * f2.im + f1.re * f2.re) * r2 * r2 / 2.0 + f2.norm_sqr() * r2.powi(3) / 16.0
            - 4.0 * (self.c3 * kappa).norm_sqr();
        (a, b, c)
    }
}

/// Linear estimate `2 omega^2 xi rho` of the Duffing forcing limit.
pub fn duffing_kappa_linear(omega: f64, xi: f64, rho: f64) -> f64 {
    2.0 * omega * omega * xi * rho
}

/// Third-order Duffing forcing limit at primary resonance.
pub fn duffing_kappa_refined(omega: f64, xi: f64, h: f64, rho: f64) -> Result<f64> {
    let den = 3.0 * h * rho * rho - 16.0 * omega * omega;
    if den == 0.0 {
        return Err(Error::Config("singular amplitude for the refined forcing rule".into()));
    }
    Ok((32.0 * omega.powi(4) * xi * rho / den).abs())
}

/// Third-order Duffing forcing limit at the 1:3 superharmonic resonance.
pub fn duffing_kappa_superharmonic(omega: f64, xi: f64, h: f64, rho: f64) -> Result<f64> {
    if h == 0.0 {
        return Err(Error::Config("superharmonic rule needs a cubic term".into()));
    }
    let delta = (1.0 - xi * xi).sqrt();
    let inner = omega.powi(8) * (9.0 * xi * xi + 16.0).powf(1.5) * delta * xi * rho / h;
    Ok(4.0 / 9.0 * inner.cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert!((duffing_kappa_linear(1.5, 0.02, 1.144) - 0.10296).abs() < 1e-5);
        assert!((duffing_kappa_refined(1.5, 0.02, 1.0, 1.144).unwrap() - 0.1156).abs() < 1e-3);
        assert!((duffing_kappa_superharmonic(1.5, 0.002, 1.0, 1.144).unwrap() - 0.691).abs() < 1e-3);
        assert!(duffing_kappa_refined(1.5, 0.1, 3.0, 2.0).is_err());
    }

    fn quadratic_roots(rom: &GenericRom, rho: f64, kappa: f64) -> Vec<f64> {
        let (a, b, c) = rom.omega_quadratic(rho, kappa);
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return vec![];
        }
        vec![(-b - disc.sqrt()) / (2.0 * a), (-b + disc.sqrt()) / (2.0 * a)]
    }

    #[test]
    fn truncated_fixed_points_close_the_circle() {
        for c3 in [C64::new(0.0, -0.25), C64::new(0.2, -0.1)] {
            let rom = GenericRom { f1: C64::new(-0.05, 1.0), f2: C64::new(-0.01, 0.3), c3 };
            for omega in quadratic_roots(&rom, 0.4, 0.3) {
                let (s, c) = rom.phase_of(0.4, omega, 0.3);
                assert!((s * s + c * c - 1.0).abs() < 1e-10);
                let r = rom.polar_rhs(0.4, s.atan2(c), omega, 0.3);
                assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn peak_discriminant_vanishes_at_max_forcing() {
        let rom = GenericRom { f1: C64::new(-0.03, 1.5), f2: C64::new(-0.002, 0.28), c3: C64::new(0.01, -0.17) };
        let kappa = rom.max_forcing(0.6).unwrap();
        let (a, b, c) = rom.omega_quadratic(0.6, kappa);
        assert!((b * b - 4.0 * a * c).abs() < 1e-10 * b * b);
    }
}
