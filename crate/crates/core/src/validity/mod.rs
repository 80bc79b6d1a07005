//! Estimates of the radius `rho` up to which a parametrisation can be trusted.
//!
//! All criteria work on the polar slice
//! `z1 = (rho/2) e^{i theta}`, `z2 = conj(z1)`, and for forced systems
//! `z3 = e^{i (r theta - phi)}`, `z4 = conj(z3)` with `r = m/n`.

mod extrapolate;
mod invariance;
mod series;
mod singularity;

pub use extrapolate::{extrapolate, Extrapolation};
pub use invariance::{invariance_limit, simplified_limit, simplified_limit_by_angle};
pub use series::{series_limits, series_sequence, SeriesComponent, SeriesOptions};
pub use singularity::{singularity_limit, singularity_limit_svd};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{c, C64};
use crate::parametrisation::{Parametrisation, Ratio};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Invariance,
    Simplified,
    SimplifiedAngle,
    Singularity,
    SingularitySvd,
    Cauchy,
    Dalembert,
}

impl Criterion {
    pub const ALL: [Criterion; 7] = [
        Criterion::Invariance,
        Criterion::Simplified,
        Criterion::SimplifiedAngle,
        Criterion::Singularity,
        Criterion::SingularitySvd,
        Criterion::Cauchy,
        Criterion::Dalembert,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Invariance => "invariance",
            Criterion::Simplified => "simplified",
            Criterion::SimplifiedAngle => "simplified-angle",
            Criterion::Singularity => "singularity",
            Criterion::SingularitySvd => "singularity-svd",
            Criterion::Cauchy => "cauchy",
            Criterion::Dalembert => "dalembert",
        }
    }

    pub fn parse(s: &str) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    /// Ratio estimates oscillate instead of settling.
    NonConvergent,
    /// No crossing, root or rank drop inside the searched range.
    NotFound,
}

/// Radius obtained along one direction of the polar slice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSample {
    pub theta: f64,
    pub phi: f64,
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityEstimate {
    pub criterion: Criterion,
    pub rho_star: Option<f64>,
    pub status: Status,
    /// Angles at which the minimum is attained.
    pub theta_star: Option<f64>,
    pub phi_star: Option<f64>,
    pub samples: Vec<AngleSample>,
}

impl ValidityEstimate {
    pub(crate) fn from_samples(criterion: Criterion, samples: Vec<AngleSample>) -> Self {
        let best = samples
            .iter()
            .filter_map(|s| s.rho.map(|r| (r, s)))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        ValidityEstimate {
            criterion,
            rho_star: best.map(|b| b.0),
            status: if best.is_some() { Status::Converged } else { Status::NotFound },
            theta_star: best.map(|b| b.1.theta),
            phi_star: best.map(|b| b.1.phi),
            samples,
        }
    }
}

/// Directions sampled on the polar slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl AngleGrid {
    /// `n_theta` angles over one full period of the slice and `n_phi` phases
    /// (a single phase for autonomous expansions).
    pub fn new(par: &Parametrisation, n_theta: usize, n_phi: usize) -> Self {
        let span = theta_span(par);
        let thetas = (0..n_theta).map(|k| span * k as f64 / n_theta as f64).collect();
        let phis = if par.is_forced() {
            (0..n_phi.max(1)).map(|k| 2.0 * PI * k as f64 / n_phi.max(1) as f64).collect()
        } else {
            vec![0.0]
        };
        AngleGrid { thetas, phis }
    }

    /// 64 angles per `2 pi` and, when forced, the four phases `0, pi/2, pi, 3pi/2`.
    pub fn default_for(par: &Parametrisation) -> Self {
        let n = if par.is_forced() { par.ratio().n as usize } else { 1 };
        Self::new(par, 64 * n, 4)
    }

    pub fn directions(&self) -> Vec<(f64, f64)> {
        self.phis
            .iter()
            .flat_map(|&phi| self.thetas.iter().map(move |&t| (t, phi)))
            .collect()
    }
}

/// Length of the `theta` interval after which the polar slice repeats: `2 pi n`.
pub fn theta_span(par: &Parametrisation) -> f64 {
    if par.is_forced() {
        2.0 * PI * par.ratio().n as f64
    } else {
        2.0 * PI
    }
}

/// Point of the polar slice.
pub fn polar_point(d: usize, ratio: Ratio, rho: f64, theta: f64, phi: f64) -> Vec<C64> {
    let z1 = C64::from_polar(rho / 2.0, theta);
    let mut z = vec![z1, z1.conj()];
    if d == 4 {
        let z3 = C64::from_polar(1.0, ratio.value() * theta - phi);
        z.push(z3);
        z.push(z3.conj());
    }
    z
}

/// Tunables shared by the root-searching criteria. Radii are given for the
/// unit-displacement normalisation and rescaled automatically.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub epsilon: f64,
    pub rho_start: f64,
    pub rho_cap: f64,
    pub growth: f64,
    /// Upper end of the singularity scan.
    pub rho_search: f64,
    /// Ratio between consecutive radii of the singularity scan.
    pub scan_ratio: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            epsilon: 1e-2,
            rho_start: 1e-3,
            rho_cap: 100.0,
            growth: 1.5,
            rho_search: 10.0,
            scan_ratio: 1.01,
        }
    }
}

/// Maximum of `|W_row|` over the polar circle of radius `rho`, truncating `W`
/// at `eval_order`. The phases scanned are those of `grid`.
pub fn u_max(par: &Parametrisation, rho: f64, grid: &AngleGrid, row: usize, eval_order: usize) -> f64 {
    let ev = par.evaluator(eval_order);
    let span = theta_span(par);
    let n = 720 * if par.is_forced() { par.ratio().n as usize } else { 1 };
    let mut best = 0.0f64;
    for &phi in &grid.phis {
        for k in 0..n {
            let theta = span * k as f64 / n as f64;
            let z = polar_point(par.dim(), par.ratio(), rho, theta, phi);
            best = best.max(ev.w_row(&z, row).norm());
        }
    }
    best
}

/// Finds the smallest `rho` in `(lo, hi]` where `f` changes sign, scanning
/// geometrically by `ratio` and refining by bisection.
pub(crate) fn first_sign_change(f: impl Fn(f64) -> f64, lo: f64, hi: f64, ratio: f64) -> Option<f64> {
    let mut a = lo;
    let mut fa = f(a);
    while a < hi {
        let b = (a * ratio).min(hi);
        let fb = f(b);
        if fa == 0.0 {
            return Some(a);
        }
        if fa.signum() != fb.signum() {
            return Some(bisect(&f, a, b, fa));
        }
        a = b;
        fa = fb;
    }
    None
}

pub(crate) fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let sa = fa.signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= 1e-13 * m {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub(crate) fn zero() -> C64 {
    c(0.0, 0.0)
}

/// Rank threshold of [`singularity_limit_svd`] used by [`estimate`].
pub const SVD_RANK_TOL: f64 = 1e-8;

/// Runs one criterion with the given grid and tunables.
pub fn estimate(
    par: &Parametrisation,
    criterion: Criterion,
    grid: &AngleGrid,
    opts: &SearchOptions,
    series: &SeriesOptions,
) -> ValidityEstimate {
    match criterion {
        Criterion::Invariance => invariance_limit(par, grid, opts),
        Criterion::Simplified => simplified_limit(par, opts.epsilon),
        Criterion::SimplifiedAngle => simplified_limit_by_angle(par, grid, opts.epsilon),
        Criterion::Singularity => singularity_limit(par, grid, opts),
        Criterion::SingularitySvd => singularity_limit_svd(par, grid, opts, SVD_RANK_TOL),
        Criterion::Cauchy => series_limits(par, grid, series).0,
        Criterion::Dalembert => series_limits(par, grid, series).1,
    }
}

/// Extrapolates the per-order sequence of a series criterion to infinite
/// order using the orders `2..=max_order`. The first order only carries the
/// eigenvector normalisation and would dominate the fit.
pub fn extrapolate_series(
    par: &Parametrisation,
    grid: &AngleGrid,
    series: &SeriesOptions,
    criterion: Criterion,
    max_order: usize,
) -> crate::Result<Extrapolation> {
    let points: Vec<(f64, f64)> = series_sequence(par, grid, series, criterion)
        .into_iter()
        .filter(|&(q, _)| (2..=max_order).contains(&q))
        .map(|(q, r)| (q as f64, r))
        .collect();
    extrapolate(&points)
}
