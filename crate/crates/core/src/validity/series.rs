use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{polar_point, zero, AngleGrid, AngleSample, Criterion, Status, ValidityEstimate};
use crate::linalg::C64;
use crate::model::{QuadSystem, RowKind};
use crate::multiindex::MultiIndex;
use crate::parametrisation::Parametrisation;

/// Quantity whose power series in `rho` is examined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesComponent {
    /// One row of `W`.
    Row(usize),
    /// First master component of `f`, expressed in displacement units.
    ReducedDynamics,
}

impl SeriesComponent {
    pub fn displacement(sys: &QuadSystem) -> Self {
        SeriesComponent::Row(sys.displacement_row())
    }

    pub fn velocity(sys: &QuadSystem) -> Option<Self> {
        sys.velocity_row().map(SeriesComponent::Row)
    }

    /// Every physical row of `W` plus the reduced dynamics.
    pub fn defaults(sys: &QuadSystem) -> Vec<Self> {
        (0..sys.dim())
            .filter(|&r| sys.row_kind(r) == RowKind::Physical)
            .map(SeriesComponent::Row)
            .chain(std::iter::once(SeriesComponent::ReducedDynamics))
            .collect()
    }
}

/// Coefficients of one component grouped by the power of `rho`.
struct Graded {
    by_power: Vec<Vec<(MultiIndex, C64)>>,
}

fn graded(par: &Parametrisation, comp: SeriesComponent) -> Graded {
    let mut by_power = vec![Vec::new(); par.order() + 1];
    let unit = par.master().displacement_amplitude();
    for (alpha, coef) in par.iter() {
        let value = match comp {
            SeriesComponent::Row(r) => {
                let v = coef.w[r];
                let size = crate::linalg::norm2(&coef.w);
                if v.norm() <= 1e-13 * size {
                    zero()
                } else {
                    v
                }
            }
            SeriesComponent::ReducedDynamics => coef.f[0] * unit,
        };
        if value != zero() {
            by_power[alpha.get(0) as usize + alpha.get(1) as usize].push((alpha, value));
        }
    }
    Graded { by_power }
}

/// Magnitudes `a_p` along one direction; `None` where the terms cancel or vanish.
fn magnitudes(g: &Graded, d: usize, par: &Parametrisation, theta: f64, phi: f64) -> Vec<Option<f64>> {
    let z = polar_point(d, par.ratio(), 2.0, theta, phi);
    g.by_power
        .iter()
        .enumerate()
        .map(|(p, terms)| {
            let scale = 0.5f64.powi(p as i32);
            let mut sum = zero();
            let mut abs = 0.0;
            for (alpha, c) in terms {
                sum += c * alpha.eval(&z);
                abs += c.norm();
            }
            let (a, s) = (sum.norm() * scale, abs * scale);
            (s > 0.0 && a > 1e-10 * s).then_some(a)
        })
        .collect()
}

fn cauchy_from(a: &[Option<f64>], upto: usize) -> Option<f64> {
    (1..=upto.min(a.len() - 1))
        .rev()
        .find_map(|p| a[p].map(|v| v.powf(-1.0 / p as f64)))
}

/// Ratio estimate from the last two nonzero terms up to `upto`, and whether
/// the last few ratios settle.
fn dalembert_from(a: &[Option<f64>], upto: usize, window: usize, spread: f64) -> Option<(f64, bool)> {
    let nz: Vec<(usize, f64)> = (1..=upto.min(a.len() - 1))
        .filter_map(|p| a[p].map(|v| (p, v)))
        .collect();
    if nz.len() < 2 {
        return None;
    }
    let est: Vec<f64> = nz
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).powf(1.0 / (w[1].0 - w[0].0) as f64))
        .collect();
    let tail = &est[est.len().saturating_sub(window)..];
    let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
    let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
    Some((*est.last().unwrap(), hi <= spread * lo))
}

/// Components and convergence rule used by the series criteria.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub cauchy: Vec<SeriesComponent>,
    pub dalembert: Vec<SeriesComponent>,
    /// Number of trailing ratio estimates inspected for convergence.
    pub window: usize,
    /// Largest allowed max/min spread of those estimates.
    pub spread: f64,
}

impl SeriesOptions {
    /// Root test on every physical row and the reduced dynamics; ratio test
    /// on the master displacement, master velocity and reduced dynamics only,
    /// since slave rows carry sign changes that keep their ratios from settling.
    pub fn defaults(sys: &QuadSystem) -> Self {
        let mut dal = vec![SeriesComponent::displacement(sys)];
        dal.extend(SeriesComponent::velocity(sys));
        dal.push(SeriesComponent::ReducedDynamics);
        SeriesOptions { cauchy: SeriesComponent::defaults(sys), dalembert: dal, window: 5, spread: 1.1 }
    }

    /// Both tests on the same components.
    pub fn uniform(components: Vec<SeriesComponent>) -> Self {
        SeriesOptions { cauchy: components.clone(), dalembert: components, window: 5, spread: 1.1 }
    }
}

/// Cauchy (root test) and d'Alembert (ratio test) radii, minimised over
/// directions and components.
///
/// A term counts as zero when the sum over its monomials cancels to below
/// `1e-10` of the sum of their moduli, which skips nodal directions.
/// D'Alembert estimates whose trailing ratios spread by more than
/// `opts.spread` are flagged non-convergent and left out of the minimum.
pub fn series_limits(par: &Parametrisation, grid: &AngleGrid, opts: &SeriesOptions) -> (ValidityEstimate, ValidityEstimate) {
    let gc: Vec<Graded> = opts.cauchy.iter().map(|&c| graded(par, c)).collect();
    let gd: Vec<Graded> = opts.dalembert.iter().map(|&c| graded(par, c)).collect();
    let d = par.dim();
    let o = par.order();
    let per_dir: Vec<(AngleSample, AngleSample, bool)> = grid
        .directions()
        .par_iter()
        .map(|&(theta, phi)| {
            let mut cauchy: Option<f64> = None;
            let mut dal: Option<f64> = None;
            let mut any_dal = false;
            for g in &gc {
                let a = magnitudes(g, d, par, theta, phi);
                if let Some(r) = cauchy_from(&a, o) {
                    cauchy = Some(cauchy.map_or(r, |c| c.min(r)));
                }
            }
            for g in &gd {
                let a = magnitudes(g, d, par, theta, phi);
                if let Some((r, ok)) = dalembert_from(&a, o, opts.window, opts.spread) {
                    any_dal = true;
                    if ok {
                        dal = Some(dal.map_or(r, |c| c.min(r)));
                    }
                }
            }
            (
                AngleSample { theta, phi, rho: cauchy },
                AngleSample { theta, phi, rho: dal },
                any_dal,
            )
        })
        .collect();
    let any_dal = per_dir.iter().any(|x| x.2);
    let cauchy = ValidityEstimate::from_samples(Criterion::Cauchy, per_dir.iter().map(|x| x.0).collect());
    let mut dal = ValidityEstimate::from_samples(Criterion::Dalembert, per_dir.iter().map(|x| x.1).collect());
    if dal.rho_star.is_none() && any_dal {
        dal.status = Status::NonConvergent;
    }
    (cauchy, dal)
}

/// Radius estimate of each truncation order `q = 1..=o`, minimised over
/// directions and the components of `criterion`. Orders where every term
/// vanishes are skipped.
pub fn series_sequence(
    par: &Parametrisation,
    grid: &AngleGrid,
    opts: &SeriesOptions,
    criterion: Criterion,
) -> Vec<(usize, f64)> {
    let comps = if criterion == Criterion::Dalembert { &opts.dalembert } else { &opts.cauchy };
    let gs: Vec<Graded> = comps.iter().map(|&c| graded(par, c)).collect();
    let d = par.dim();
    let all: Vec<Vec<Option<f64>>> = grid
        .directions()
        .par_iter()
        .flat_map_iter(|&(theta, phi)| gs.iter().map(move |g| magnitudes(g, d, par, theta, phi)))
        .collect();
    (1..=par.order())
        .filter_map(|q| {
            let vals = all.iter().filter_map(|a| match criterion {
                Criterion::Cauchy => a[q].map(|v| v.powf(-1.0 / q as f64)),
                Criterion::Dalembert => {
                    a[q]?;
                    dalembert_from(a, q, opts.window, opts.spread).filter(|x| x.1).map(|x| x.0)
                }
                _ => None,
            });
            vals.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
                .map(|v| (q, v))
        })
        .collect()
}
