//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// One-norm of a matrix (max column sum).
pub fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU factorisation of a square matrix together with its adjoint, so that
/// both `M x = b` and `M^H x = b` can be solved.
pub struct Factored {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_h: Option<nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
    m: CMatrix,
}

impl Factored {
    pub fn new(m: CMatrix) -> Self {
        let lu = m.clone().lu();
        Factored { lu, lu_h: None, m }
    }

    pub fn is_invertible(&self) -> bool {
        self.lu.is_invertible()
    }

    pub fn solve(&self, b: &CVector) -> Result<CVector> {
        self.lu
            .solve(b)
            .ok_or_else(|| Error::Singular("LU solve failed".into()))
    }

    fn solve_adjoint(&mut self, b: &CVector) -> Result<CVector> {
        if self.lu_h.is_none() {
            self.lu_h = Some(self.m.adjoint().lu());
        }
        self.lu_h
            .as_ref()
            .unwrap()
            .solve(b)
            .ok_or_else(|| Error::Singular("adjoint LU solve failed".into()))
    }

    /// Hager–Higham estimate of the one-norm condition number.
    pub fn condition_estimate(&mut self) -> f64 {
        let n = self.m.nrows();
        if !self.lu.is_invertible() {
            return f64::INFINITY;
        }
        let anorm = norm1(&self.m);
        let mut x = CVector::from_element(n, c(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        for _ in 0..5 {
            let y = match self.solve(&x) {
                Ok(y) => y,
                Err(_) => return f64::INFINITY,
            };
            let ynorm: f64 = y.iter().map(|z| z.norm()).sum();
            if !ynorm.is_finite() {
                return f64::INFINITY;
            }
            if ynorm <= est {
                break;
            }
            est = ynorm;
            let xi = y.map(|z| if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) });
            let zv = match self.solve_adjoint(&xi) {
                Ok(z) => z,
                Err(_) => return f64::INFINITY,
            };
            let (jmax, zmax) = zv
                .iter()
                .enumerate()
                .map(|(j, z)| (j, z.norm()))
                .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            let ztx: f64 = zv.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx.abs() {
                break;
            }
            x = CVector::zeros(n);
            x[jmax] = c(1.0, 0.0);
        }
        est * anorm
    }
}

/// Euclidean norm of a complex vector.
pub fn norm2(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest singular triplet `(sigma, u, v)` of a matrix, with `M v = sigma u`.
pub fn smallest_singular(m: &CMatrix) -> Result<(f64, CVector, CVector)> {
    let svd = nalgebra::linalg::SVD::new(m.clone(), true, true);
    let (k, s) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |a, (k, &s)| if s < a.1 { (k, s) } else { a });
    let u = svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD without U".into()))?;
    let vt = svd.v_t.as_ref().ok_or_else(|| Error::Numerical("SVD without V".into()))?;
    let left = u.column(k).into_owned();
    let right = vt.row(k).adjoint().into_owned();
    Ok((s, left, right))
}

/// Singular values of a matrix sorted in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let svd = nalgebra::linalg::SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_of_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(1e-6, 0.0)]));
        let k = Factored::new(m).condition_estimate();
        assert!((k - 1e6).abs() / 1e6 < 1e-10);
    }

    #[test]
    fn smallest_triplet_of_rank_one() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let (s, _, v) = smallest_singular(&m).unwrap();
        assert!(s < 1e-12);
        assert!(norm2(&(&m * &v)) < 1e-12);
    }

    #[test]
    fn dotc_conjugates_receiver() {
        let a = CVector::from_vec(vec![c(0.0, 1.0)]);
        let b = CVector::from_vec(vec![c(1.0, 0.0)]);
        assert_eq!(a.dotc(&b), c(0.0, -1.0));
    }
}
