use rayon::prelude::*;

use super::{bisect, polar_point, AngleGrid, AngleSample, Criterion, SearchOptions, ValidityEstimate};
use crate::linalg::{CVector, C64};
use crate::multiindex::{MultiIndex, MultiIndexTable};
use crate::parametrisation::Parametrisation;

/// Smallest `rho` at which the normalised invariance error reaches `epsilon`,
/// per direction, by geometric bracketing and bisection.
pub fn invariance_limit(par: &Parametrisation, grid: &AngleGrid, opts: &SearchOptions) -> ValidityEstimate {
    let ev = par.evaluator(par.order());
    let s = par.radius_scale();
    let (start, cap) = (opts.rho_start * s, opts.rho_cap * s);
    let samples = grid
        .directions()
        .par_iter()
        .map(|&(theta, phi)| {
            let g = |rho: f64| {
                let z = polar_point(par.dim(), par.ratio(), rho, theta, phi);
                ev.invariance_error(&z) - opts.epsilon
            };
            let mut lo = start;
            let mut glo = g(lo);
            let rho = if glo >= 0.0 {
                Some(lo)
            } else {
                loop {
                    let hi = lo * opts.growth;
                    if hi > cap {
                        break None;
                    }
                    let ghi = g(hi);
                    if ghi >= 0.0 {
                        break Some(bisect(&g, lo, hi, glo));
                    }
                    lo = hi;
                    glo = ghi;
                }
            };
            AngleSample { theta, phi, rho }
        })
        .collect();
    ValidityEstimate::from_samples(Criterion::Invariance, samples)
}

/// Leading-order estimate `rho = 2 (|A Y| eps / |R_{o+1}|)^{1/(o+1)}` from the
/// stacked residual of the first neglected order.
pub fn simplified_limit(par: &Parametrisation, epsilon: f64) -> ValidityEstimate {
    let o1 = (par.order() + 1) as f64;
    let r = par.next_order_residual_norm();
    let rho = if r > 0.0 {
        Some(2.0 * (par.residual_scale() * epsilon / r).powf(1.0 / o1))
    } else {
        None
    };
    let mut est = ValidityEstimate::from_samples(
        Criterion::Simplified,
        vec![AngleSample { theta: 0.0, phi: 0.0, rho }],
    );
    est.theta_star = None;
    est.phi_star = None;
    est
}

/// Direction-resolved version of [`simplified_limit`]: the neglected
/// order is summed along each direction before taking its norm.
pub fn simplified_limit_by_angle(par: &Parametrisation, grid: &AngleGrid, epsilon: f64) -> ValidityEstimate {
    let p = par.order() + 1;
    let table = MultiIndexTable::new(par.dim(), p);
    let residuals: Vec<(MultiIndex, CVector)> = table
        .of_order(p)
        .iter()
        .filter(|a| a.forcing_degree() <= par.order_na())
        .map(|a| (*a, par.residual(a)))
        .collect();
    let scale = par.residual_scale();
    let nb = par.system().base_dim();
    let samples = grid
        .directions()
        .iter()
        .map(|&(theta, phi)| {
            // unit radius: z1 = e^{i theta}/2 contributes 2^{-p} times the phase
            let z = polar_point(par.dim(), par.ratio(), 2.0, theta, phi);
            let mut acc = CVector::zeros(nb);
            for (a, r) in &residuals {
                let m: C64 = a.eval(&z);
                acc += r * m;
            }
            let norm = crate::linalg::norm2(&acc);
            let rho = (norm > 0.0).then(|| 2.0 * (scale * epsilon / norm).powf(1.0 / p as f64));
            AngleSample { theta, phi, rho }
        })
        .collect();
    ValidityEstimate::from_samples(Criterion::SimplifiedAngle, samples)
}
