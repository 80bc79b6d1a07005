//! Direct parametrisation of the invariant manifold attached to the master pair.
//!
//! The manifold is written as `y = W(z)` with reduced dynamics `z' = f(z)`,
//! both as polynomials in `z = (z1, z2)` or, for forced systems,
//! `z = (z1, z2, z3, z4)` with `z3 = e^{i Omega t}` and `z4 = conj(z3)`.
//! Coefficients are obtained order by order from the homological equation
//!
//! `(sigma B - A) W_a + sum_{s in R} B Y_s f_s^a = R_a`.

mod eval;
mod io;

pub use eval::Evaluator;
pub use io::CoefficientDump;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, Factored, C64, I};
use crate::model::QuadSystem;
use crate::multiindex::{MultiIndex, MultiIndexTable};
use crate::spectral::{master_mode, MasterMode, Normalisation};

/// Which terms are kept in the reduced dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    /// Complex normal form: only resonant monomials enter `f`.
    Cnf,
    /// Graph style: every monomial enters `f`, so `W` is a graph over the master modes.
    Graph,
}

/// How resonant monomials are detected in normal-form style.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResonanceRule {
    /// Exact resonance of the undamped frequencies:
    /// `n (a1 - a2) + m (a3 - a4) = +-n` for the ratio `Omega = (m/n) omega`.
    Lattice,
    /// `|sigma - lambda_s| <= tol |Im lambda_s|`.
    Tolerance(f64),
}

/// Forcing ratio `Omega = (m / n) omega`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub m: u32,
    pub n: u32,
}

impl Ratio {
    pub const PRIMARY: Ratio = Ratio { m: 1, n: 1 };

    pub fn new(m: u32, n: u32) -> Result<Ratio> {
        if m == 0 || n == 0 {
            return Err(Error::Config("resonance ratio terms must be positive".into()));
        }
        Ok(Ratio { m, n })
    }

    pub fn value(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

/// Options for [`Parametrisation::build`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub style: Style,
    /// Maximum total order `o`.
    pub order: usize,
    /// Maximum exponent sum over the forcing variables; defaults to `order`.
    pub order_na: Option<usize>,
    pub rule: ResonanceRule,
    pub ratio: Ratio,
    /// Target frequency used to select the master pair.
    pub target: f64,
    pub normalisation: Normalisation,
}

impl Settings {
    pub fn new(style: Style, order: usize, target: f64) -> Self {
        Settings {
            style,
            order,
            order_na: None,
            rule: ResonanceRule::Lattice,
            ratio: Ratio::PRIMARY,
            target,
            normalisation: Normalisation::UnitDisplacement,
        }
    }

    pub fn with_order_na(mut self, o_na: usize) -> Self {
        self.order_na = Some(o_na);
        self
    }

    pub fn with_ratio(mut self, ratio: Ratio) -> Self {
        self.ratio = ratio;
        self
    }

    pub fn with_normalisation(mut self, n: Normalisation) -> Self {
        self.normalisation = n;
        self
    }

    pub fn with_rule(mut self, rule: ResonanceRule) -> Self {
        self.rule = rule;
        self
    }
}

/// Coefficients attached to one monomial `z^alpha`.
#[derive(Clone, Debug)]
pub struct Coefficient {
    /// Manifold coefficient on the autonomous rows.
    pub w: CVector,
    /// `B w`, cached for the transport terms.
    pub bw: CVector,
    /// Reduced-dynamics coefficients of the two master variables.
    pub f: [C64; 2],
    pub sigma: C64,
    /// Bit `s` set when the monomial is resonant with master `s`.
    pub resonant: u8,
}

/// Resonance mask of `alpha` (bit 0: `lambda`, bit 1: `conj(lambda)`).
pub fn resonant_set(alpha: &MultiIndex, lambdas: &[C64], style: Style, rule: ResonanceRule, ratio: Ratio) -> u8 {
    if style == Style::Graph {
        return 0b11;
    }
    match rule {
        ResonanceRule::Lattice => {
            let e = |i: usize| if i < alpha.dim() { alpha.get(i) as i64 } else { 0 };
            let h = ratio.n as i64 * (e(0) - e(1)) + ratio.m as i64 * (e(2) - e(3));
            let n = ratio.n as i64;
            (if h == n { 1 } else { 0 }) | (if h == -n { 2 } else { 0 })
        }
        ResonanceRule::Tolerance(tol) => {
            let sigma = sigma_of(alpha, lambdas);
            let mut mask = 0;
            for s in 0..2 {
                if (sigma - lambdas[s]).norm() <= tol * lambdas[s].im.abs() {
                    mask |= 1 << s;
                }
            }
            mask
        }
    }
}

fn sigma_of(alpha: &MultiIndex, lambdas: &[C64]) -> C64 {
    alpha
        .exps()
        .iter()
        .zip(lambdas)
        .map(|(&e, &l)| l * e as f64)
        .sum()
}

/// A computed parametrisation together with the system it belongs to.
#[derive(Clone, Debug)]
pub struct Parametrisation {
    sys: QuadSystem,
    master: MasterMode,
    settings: Settings,
    order_na: usize,
    lambdas: Vec<C64>,
    table: MultiIndexTable,
    coeffs: Vec<Option<Coefficient>>,
    forcing_columns: Option<(CVector, CVector)>,
    f_terms: Vec<(MultiIndex, usize, C64)>,
}

struct Homological<'a> {
    b: &'a CMatrix,
    a: &'a CMatrix,
    bys: [CVector; 2],
    xhb: [CVector; 2],
}

impl Homological<'_> {
    fn solve(&self, alpha: &MultiIndex, sigma: C64, mask: u8, rhs: &CVector) -> Result<(CVector, [C64; 2])> {
        let n = self.b.nrows();
        let res: Vec<usize> = (0..2).filter(|s| mask & (1 << s) != 0).collect();
        let k = res.len();
        let mut m = CMatrix::zeros(n + k, n + k);
        m.view_mut((0, 0), (n, n)).copy_from(&(self.b * sigma - self.a));
        for (j, &s) in res.iter().enumerate() {
            m.view_mut((0, n + j), (n, 1)).copy_from(&self.bys[s]);
            m.view_mut((n + j, 0), (1, n)).copy_from(&self.xhb[s].transpose());
        }
        let mut full = CVector::zeros(n + k);
        full.rows_mut(0, n).copy_from(rhs);
        let mut fac = Factored::new(m);
        let cond = fac.condition_estimate();
        let limit = if k == 0 { 1e12 } else { 1e14 };
        if !cond.is_finite() || cond > limit {
            return Err(Error::IllConditioned { monomial: alpha.to_string(), condition: cond });
        }
        let sol = fac.solve(&full)?;
        let mut f = [C64::new(0.0, 0.0); 2];
        for (j, &s) in res.iter().enumerate() {
            f[s] = sol[n + j];
        }
        Ok((sol.rows(0, n).into_owned(), f))
    }
}

impl Parametrisation {
    /// Computes all coefficients up to `settings.order`.
    pub fn build(sys: &QuadSystem, settings: &Settings) -> Result<Parametrisation> {
        if settings.order == 0 {
            return Err(Error::Config("order must be at least 1".into()));
        }
        if settings.order > 255 {
            return Err(Error::Config("order above 255 is not supported".into()));
        }
        let master = master_mode(sys, settings.target, settings.normalisation)?;
        let forced = sys.is_forced();
        let d = if forced { 4 } else { 2 };
        let order_na = settings.order_na.unwrap_or(settings.order).min(settings.order);
        let mut lambdas = vec![master.lambda, master.lambda.conj()];
        let forcing_columns = sys.forcing().map(|f| f.complex_columns());
        if let Some(spec) = sys.forcing() {
            lambdas.push(I * spec.omega);
            lambdas.push(-I * spec.omega);
        }
        let base = sys.base();
        let table = MultiIndexTable::new(d, settings.order);
        let mut par = Parametrisation {
            sys: sys.clone(),
            master,
            settings: settings.clone(),
            order_na,
            lambdas,
            table,
            coeffs: Vec::new(),
            forcing_columns,
            f_terms: Vec::new(),
        };
        par.coeffs = vec![None; par.table.len()];
        let ys = [par.master.right(0), par.master.right(1)];
        let bys = [base.b() * &ys[0], base.b() * &ys[1]];
        let xhb = [
            (base.b().adjoint() * par.master.left(0)).map(|z| z.conj()),
            (base.b().adjoint() * par.master.left(1)).map(|z| z.conj()),
        ];
        let hom = Homological { b: base.b(), a: base.a(), bys: bys.clone(), xhb };

        for s in 0..2 {
            let alpha = MultiIndex::unit(d, s);
            let mut f = [c(0.0, 0.0); 2];
            f[s] = par.lambdas[s];
            let id = par.table.id(&alpha).unwrap();
            par.coeffs[id] = Some(Coefficient {
                w: ys[s].clone(),
                bw: bys[s].clone(),
                f,
                sigma: par.lambdas[s],
                resonant: 1 << s,
            });
        }
        if forced && order_na >= 1 {
            let (plus, minus) = par.forcing_columns.clone().unwrap();
            for (j, rhs) in [(2, plus), (3, minus)] {
                let alpha = MultiIndex::unit(d, j);
                let coef = par.solve_monomial(&hom, &alpha, rhs)?;
                let id = par.table.id(&alpha).unwrap();
                par.coeffs[id] = Some(coef);
            }
        }
        par.refresh_f_terms(1);

        for p in 2..=settings.order {
            let mut groups: Vec<Vec<MultiIndex>> = vec![Vec::new(); order_na.min(p) + 1];
            for alpha in par.table.of_order(p) {
                let fd = alpha.forcing_degree();
                if fd <= order_na {
                    groups[fd].push(*alpha);
                }
            }
            for group in groups {
                let solved: Vec<Result<(usize, Coefficient)>> = group
                    .par_iter()
                    .map(|alpha| {
                        let rhs = par.residual(alpha);
                        let coef = par.solve_monomial(&hom, alpha, rhs)?;
                        Ok((par.table.id(alpha).unwrap(), coef))
                    })
                    .collect();
                for item in solved {
                    let (id, coef) = item?;
                    par.coeffs[id] = Some(coef);
                }
            }
            par.refresh_f_terms(p);
        }
        Ok(par)
    }

    fn solve_monomial(&self, hom: &Homological, alpha: &MultiIndex, rhs: CVector) -> Result<Coefficient> {
        let sigma = sigma_of(alpha, &self.lambdas);
        let mask = resonant_set(alpha, &self.lambdas, self.settings.style, self.settings.rule, self.settings.ratio);
        let (w, f) = hom.solve(alpha, sigma, mask, &rhs)?;
        let bw = hom.b * &w;
        Ok(Coefficient { w, bw, f, sigma, resonant: mask })
    }

    fn refresh_f_terms(&mut self, p: usize) {
        let d = self.table.dim();
        for id in self.table.order_range(p) {
            let alpha = self.table.get(id);
            if let Some(coef) = &self.coeffs[id] {
                for i in 0..2 {
                    if alpha == MultiIndex::unit(d, i) {
                        continue;
                    }
                    if coef.f[i] != c(0.0, 0.0) {
                        self.f_terms.push((alpha, i, coef.f[i]));
                    }
                }
            }
        }
    }

    /// Right-hand side of the homological equation at `alpha`, built from
    /// the coefficients already computed.
    pub fn residual(&self, alpha: &MultiIndex) -> CVector {
        let nb = self.sys.base_dim();
        let mut r = CVector::zeros(nb);
        let p = alpha.order();
        let q = self.sys.q();
        let out = r.as_mut_slice();
        alpha.for_each_sub(|a| {
            let pa = a.order();
            if pa == 0 || pa == p {
                return;
            }
            let cc = alpha.checked_sub(&a).unwrap();
            let (Some(ia), Some(ic)) = (self.table.id(&a), self.table.id(&cc)) else {
                return;
            };
            if ia > ic {
                return;
            }
            let (Some(wa), Some(wc)) = (&self.coeffs[ia], &self.coeffs[ic]) else {
                return;
            };
            let scale = if ia == ic { c(1.0, 0.0) } else { c(2.0, 0.0) };
            q.accumulate_scaled(scale, wa.w.as_slice(), wc.w.as_slice(), out);
        });
        for &(b, i, fv) in &self.f_terms {
            if b.order() >= p {
                continue;
            }
            let Some(a) = alpha.add_unit(i).checked_sub(&b) else {
                continue;
            };
            let ai = a.get(i);
            if ai == 0 {
                continue;
            }
            let Some(id) = self.table.id(&a) else { continue };
            let Some(coef) = &self.coeffs[id] else { continue };
            let k = fv * ai as f64;
            for (o, bw) in out.iter_mut().zip(coef.bw.iter()) {
                *o -= k * bw;
            }
        }
        r
    }

    /// Stacked right-hand sides of every order-`o+1` monomial: the leading
    /// truncation residual.
    pub fn next_order_residual_norm(&self) -> f64 {
        let p = self.settings.order + 1;
        let table = MultiIndexTable::new(self.table.dim(), p);
        let mut total = 0.0;
        for alpha in table.of_order(p) {
            if alpha.forcing_degree() > self.order_na {
                continue;
            }
            let r = self.residual_extended(alpha);
            total += r.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        total.sqrt()
    }

    /// Coefficients `E_alpha` of the invariance residual `E(z) = sum E_alpha z^alpha`.
    ///
    /// Computed monomials have `E_alpha = 0`, so only the neglected ones are
    /// listed, up to order `2o` where the quadratic term stops contributing.
    /// Summing these avoids the cancellation of evaluating `E(z)` directly,
    /// which swamps the residual below `|z| ~ 1e-2` at moderate orders.
    pub fn residual_expansion(&self) -> Vec<(MultiIndex, CVector)> {
        let table = MultiIndexTable::new(self.table.dim(), 2 * self.settings.order);
        table
            .iter()
            .filter(|a| a.order() >= 2 && self.coefficient(a).is_none())
            .filter_map(|a| {
                let e = -self.residual(a);
                (crate::linalg::norm2(&e) > 0.0).then_some((*a, e))
            })
            .collect()
    }

    fn residual_extended(&self, alpha: &MultiIndex) -> CVector {
        // `alpha` is one order beyond the table, so `residual` only sees
        // sub-indices that exist; this is exactly the truncation residual.
        self.residual(alpha)
    }

    pub fn system(&self) -> &QuadSystem {
        &self.sys
    }

    pub fn master(&self) -> &MasterMode {
        &self.master
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn style(&self) -> Style {
        self.settings.style
    }

    pub fn order(&self) -> usize {
        self.settings.order
    }

    pub fn order_na(&self) -> usize {
        self.order_na
    }

    /// Number of parametrisation variables: 2, or 4 when forced.
    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn is_forced(&self) -> bool {
        self.sys.is_forced()
    }

    /// Eigenvalues attached to each parametrisation variable.
    pub fn lambdas(&self) -> &[C64] {
        &self.lambdas
    }

    pub fn ratio(&self) -> Ratio {
        self.settings.ratio
    }

    pub fn table(&self) -> &MultiIndexTable {
        &self.table
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Option<&Coefficient> {
        self.table.id(alpha).and_then(|id| self.coeffs[id].as_ref())
    }

    /// Iterates over computed monomials in graded order.
    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, &Coefficient)> {
        self.table
            .iter()
            .zip(&self.coeffs)
            .filter_map(|(a, c)| c.as_ref().map(|c| (*a, c)))
    }

    /// Reduced-dynamics coefficient of master `i` at `alpha` (zero if absent).
    pub fn f_coefficient(&self, alpha: &[u16], i: usize) -> C64 {
        let mut e = alpha.to_vec();
        e.resize(self.dim(), 0);
        self.coefficient(&MultiIndex::new(&e))
            .map(|c| c.f[i])
            .unwrap_or(c(0.0, 0.0))
    }

    /// Forcing amplitude columns multiplying `z3` and `z4`, if forced.
    pub fn forcing_columns(&self) -> Option<&(CVector, CVector)> {
        self.forcing_columns.as_ref()
    }

    /// `|A Y|` for the unit-displacement master vector; the scale of
    /// invariance residuals.
    pub fn residual_scale(&self) -> f64 {
        let base = self.sys.base();
        let ay = base.a() * &self.master.right;
        crate::linalg::norm2(&ay) / self.master.displacement_amplitude().norm()
    }

    /// Factor converting unit-displacement radii into radii of this normalisation.
    pub fn radius_scale(&self) -> f64 {
        1.0 / self.master.displacement_amplitude().norm()
    }

    pub fn evaluator(&self, max_order: usize) -> Evaluator {
        Evaluator::new(self, max_order)
    }
}
