use rayon::prelude::*;

use super::{first_sign_change, polar_point, AngleGrid, AngleSample, Criterion, SearchOptions, ValidityEstimate};
use crate::linalg::{singular_values, CMatrix, C64};
use crate::parametrisation::{Evaluator, Parametrisation};

fn tangent_block(ev: &Evaluator, z: &[C64], rows: &[usize]) -> CMatrix {
    ev.tangent_block(z, rows)
}

fn det2(m: &CMatrix) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// First radius, per direction, at which the determinant of the
/// displacement/velocity rows of `B dW/d(z1, z2)` vanishes.
///
/// For real systems the determinant is purely imaginary on the polar slice,
/// so its zeros are found as sign changes of its projection on the
/// small-amplitude value.
pub fn singularity_limit(par: &Parametrisation, grid: &AngleGrid, opts: &SearchOptions) -> ValidityEstimate {
    let sys = par.system();
    let rows = match sys.velocity_row() {
        Some(v) => vec![sys.displacement_row(), v],
        None => return ValidityEstimate::from_samples(Criterion::Singularity, Vec::new()),
    };
    let ev = par.evaluator(par.order());
    let s = par.radius_scale();
    let (lo, hi) = (opts.rho_start * 10.0 * s, opts.rho_search * s);
    let samples = grid
        .directions()
        .par_iter()
        .map(|&(theta, phi)| {
            let det = |rho: f64| {
                let z = polar_point(par.dim(), par.ratio(), rho, theta, phi);
                det2(&tangent_block(&ev, &z, &rows))
            };
            let d0 = det(lo);
            let rho = if d0.norm() == 0.0 {
                None
            } else {
                let dir = d0.conj() / d0.norm();
                first_sign_change(|r| (det(r) * dir).re, lo, hi, opts.scan_ratio)
            };
            AngleSample { theta, phi, rho }
        })
        .collect();
    ValidityEstimate::from_samples(Criterion::Singularity, samples)
}

/// First radius, per direction, at which the physical rows of
/// `B dW/d(z1, z2)` lose rank, measured by `sigma_min / sigma_max`.
///
/// Local minima of the ratio along each ray are refined by golden-section
/// search and accepted when the refined ratio is below `rank_tol`.
pub fn singularity_limit_svd(
    par: &Parametrisation,
    grid: &AngleGrid,
    opts: &SearchOptions,
    rank_tol: f64,
) -> ValidityEstimate {
    let sys = par.system();
    let rows: Vec<usize> = (0..sys.n_physical()).collect();
    let ev = par.evaluator(par.order());
    let s = par.radius_scale();
    let (lo, hi) = (opts.rho_start * 10.0 * s, opts.rho_search * s);
    let samples = grid
        .directions()
        .par_iter()
        .map(|&(theta, phi)| {
            let ratio = |rho: f64| {
                let z = polar_point(par.dim(), par.ratio(), rho, theta, phi);
                let sv = singular_values(&tangent_block(&ev, &z, &rows));
                sv[sv.len() - 1] / sv[0]
            };
            let mut prev = (lo, ratio(lo));
            let mut cur = (lo * opts.scan_ratio, ratio(lo * opts.scan_ratio));
            let mut found = None;
            while cur.0 < hi {
                let next_r = cur.0 * opts.scan_ratio;
                let next = (next_r, ratio(next_r));
                if cur.1 <= prev.1 && cur.1 <= next.1 {
                    let (rm, vm) = golden_min(&ratio, prev.0, next.0);
                    if vm < rank_tol {
                        found = Some(rm);
                        break;
                    }
                }
                prev = cur;
                cur = next;
            }
            AngleSample { theta, phi, rho: found }
        })
        .collect();
    ValidityEstimate::from_samples(Criterion::SingularitySvd, samples)
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a) <= 1e-14 * (a + b) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
