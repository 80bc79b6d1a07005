use crate::linalg::{c, norm2, CMatrix, CVector, C64, I};
use crate::model::QuadTensor;
use crate::multiindex::MultiIndex;

use super::Parametrisation;

/// Flattened, order-truncated copy of a parametrisation for fast evaluation.
#[derive(Clone, Debug)]
pub struct Evaluator {
    d: usize,
    nb: usize,
    max_order: usize,
    monos: Vec<MultiIndex>,
    w: Vec<C64>,
    bw: Vec<C64>,
    f: Vec<[C64; 2]>,
    omega: f64,
    b: CMatrix,
    a: CMatrix,
    q: QuadTensor,
    forcing: Option<(CVector, CVector)>,
    scale: f64,
}

impl Evaluator {
    pub(super) fn new(par: &Parametrisation, max_order: usize) -> Self {
        let base = par.system().base();
        let nb = base.dim();
        let mut monos = Vec::new();
        let mut w = Vec::new();
        let mut bw = Vec::new();
        let mut f = Vec::new();
        for (alpha, coef) in par.iter() {
            if alpha.order() > max_order {
                break;
            }
            monos.push(alpha);
            w.extend(coef.w.iter().copied());
            bw.extend(coef.bw.iter().copied());
            f.push(coef.f);
        }
        Evaluator {
            d: par.dim(),
            nb,
            max_order: max_order.min(par.order()),
            monos,
            w,
            bw,
            f,
            omega: par.system().forcing().map(|s| s.omega).unwrap_or(0.0),
            b: base.b().clone(),
            a: base.a().clone(),
            q: par.system().q().clone(),
            forcing: par.forcing_columns().cloned(),
            scale: par.residual_scale(),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn powers(&self, z: &[C64]) -> Vec<Vec<C64>> {
        (0..self.d)
            .map(|i| {
                let mut p = Vec::with_capacity(self.max_order + 1);
                p.push(c(1.0, 0.0));
                for k in 1..=self.max_order {
                    p.push(p[k - 1] * z[i]);
                }
                p
            })
            .collect()
    }

    #[inline]
    fn mono_value(pw: &[Vec<C64>], m: &MultiIndex) -> C64 {
        let mut v = c(1.0, 0.0);
        for (i, &e) in m.exps().iter().enumerate() {
            v *= pw[i][e as usize];
        }
        v
    }

    /// Manifold `W(z)` on the autonomous rows.
    pub fn w(&self, z: &[C64]) -> CVector {
        let pw = self.powers(z);
        let mut out = CVector::zeros(self.nb);
        for (k, m) in self.monos.iter().enumerate() {
            let v = Self::mono_value(&pw, m);
            let row = &self.w[k * self.nb..(k + 1) * self.nb];
            for (o, x) in out.iter_mut().zip(row) {
                *o += v * x;
            }
        }
        out
    }

    /// A single row of `W(z)`.
    pub fn w_row(&self, z: &[C64], row: usize) -> C64 {
        let pw = self.powers(z);
        self.monos
            .iter()
            .enumerate()
            .map(|(k, m)| Self::mono_value(&pw, m) * self.w[k * self.nb + row])
            .sum()
    }

    /// Reduced dynamics `f(z)`, including `i Omega z3` and `-i Omega z4` when forced.
    pub fn f(&self, z: &[C64]) -> Vec<C64> {
        let pw = self.powers(z);
        let mut out = vec![c(0.0, 0.0); self.d];
        for (k, m) in self.monos.iter().enumerate() {
            let v = Self::mono_value(&pw, m);
            out[0] += v * self.f[k][0];
            out[1] += v * self.f[k][1];
        }
        if self.d == 4 {
            out[2] = I * self.omega * z[2];
            out[3] = -I * self.omega * z[3];
        }
        out
    }

    /// Jacobian `dW/dz` on the autonomous rows (`nb x d`).
    pub fn jacobian(&self, z: &[C64]) -> CMatrix {
        let pw = self.powers(z);
        let mut jac = CMatrix::zeros(self.nb, self.d);
        for (k, m) in self.monos.iter().enumerate() {
            let row = &self.w[k * self.nb..(k + 1) * self.nb];
            for i in 0..self.d {
                let e = m.get(i) as usize;
                if e == 0 {
                    continue;
                }
                let mut v = c(e as f64, 0.0) * pw[i][e - 1];
                for (j, &ej) in m.exps().iter().enumerate() {
                    if j != i {
                        v *= pw[j][ej as usize];
                    }
                }
                let mut col = jac.column_mut(i);
                for (o, x) in col.iter_mut().zip(row) {
                    *o += v * x;
                }
            }
        }
        jac
    }

    /// Selected rows of `B dW/d(z1, z2)` (`rows.len() x 2`).
    pub fn tangent_block(&self, z: &[C64], rows: &[usize]) -> CMatrix {
        let pw = self.powers(z);
        let mut out = CMatrix::zeros(rows.len(), 2);
        for (k, m) in self.monos.iter().enumerate() {
            let (e1, e2) = (m.get(0) as usize, m.get(1) as usize);
            if e1 == 0 && e2 == 0 {
                continue;
            }
            let mut rest = c(1.0, 0.0);
            for i in 2..self.d {
                rest *= pw[i][m.get(i) as usize];
            }
            let d1 = if e1 > 0 { rest * pw[0][e1 - 1] * pw[1][e2] * e1 as f64 } else { c(0.0, 0.0) };
            let d2 = if e2 > 0 { rest * pw[0][e1] * pw[1][e2 - 1] * e2 as f64 } else { c(0.0, 0.0) };
            let base = k * self.nb;
            for (i, &r) in rows.iter().enumerate() {
                let v = self.bw[base + r];
                out[(i, 0)] += v * d1;
                out[(i, 1)] += v * d2;
            }
        }
        out
    }

    /// Invariance residual `B dW f - A W - Q(W, W)` (forcing terms included).
    pub fn invariance_residual(&self, z: &[C64]) -> CVector {
        let w = self.w(z);
        let jac = self.jacobian(z);
        let f = CVector::from_vec(self.f(z));
        let mut e = &self.b * (jac * f) - &self.a * &w;
        if let Some((plus, minus)) = &self.forcing {
            e -= plus * z[2] + minus * z[3];
        }
        let mut qq = CVector::zeros(self.nb);
        self.q.accumulate(w.as_slice(), w.as_slice(), qq.as_mut_slice());
        e - qq
    }

    /// Normalised invariance error `|E(z)| / |A Y|`.
    pub fn invariance_error(&self, z: &[C64]) -> f64 {
        norm2(&self.invariance_residual(z)) / self.scale
    }
}
