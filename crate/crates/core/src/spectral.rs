//! Eigenvalues of the pencil `(A, B)` and the master mode pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, norm2, smallest_singular, CMatrix, CVector, Factored, C64, I};
use crate::model::QuadSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    /// Mode of the mechanical (or algebraic) part of the system.
    Structural,
    /// One of the two forcing modes `+-i Omega` of an augmented system.
    Forcing,
}

/// A finite eigenvalue with right and left eigenvectors:
/// `A y = lambda B y` and `x^H A = lambda x^H B`.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: C64,
    pub right: CVector,
    pub left: CVector,
    pub kind: ModeKind,
}

/// Finite eigenpairs of `A y = lambda B y`, sorted by modulus then imaginary part.
///
/// Infinite eigenvalues (from the algebraic rows) are discarded. They show up
/// as zero eigenvalues of `A^{-1} B`.
pub fn eigenpairs(sys: &QuadSystem) -> Result<Vec<Eigenpair>> {
    let n = sys.dim();
    let fa = Factored::new(sys.a().clone());
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        let col = fa.solve(&sys.b().column(j).into_owned())?;
        m.set_column(j, &col);
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mus = nalgebra::linalg::Schur::new(m)
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let mut out = Vec::new();
    for mu in mus.iter() {
        if mu.norm() <= 1e-11 * scale {
            continue;
        }
        let mut lambda = c(1.0, 0.0) / mu;
        let (right, left) = null_vectors(sys, lambda)?;
        let xb = left.dotc(&(sys.b() * &right));
        if xb.norm() > 1e-12 * norm2(&left) * norm2(&right) {
            let refined = left.dotc(&(sys.a() * &right)) / xb;
            if (refined - lambda).norm() < 1e-6 * (1.0 + lambda.norm()) {
                lambda = refined;
            }
        }
        let (right, left) = null_vectors(sys, lambda)?;
        let kind = if sys.is_forced() {
            let nb = sys.base_dim();
            let forcing_part: f64 = right.iter().skip(nb).map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if forcing_part > 1e-8 * norm2(&right) {
                ModeKind::Forcing
            } else {
                ModeKind::Structural
            }
        } else {
            ModeKind::Structural
        };
        out.push(Eigenpair { value: lambda, right, left, kind });
    }
    out.sort_by(|a, b| {
        a.value
            .norm()
            .partial_cmp(&b.value.norm())
            .unwrap()
            .then(a.value.im.partial_cmp(&b.value.im).unwrap())
    });
    Ok(out)
}

fn null_vectors(sys: &QuadSystem, lambda: C64) -> Result<(CVector, CVector)> {
    let pencil = sys.a() - sys.b() * lambda;
    let (_, left, right) = smallest_singular(&pencil)?;
    Ok((right, left))
}

/// How the master eigenvectors are scaled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalisation {
    /// The displacement entry of the right eigenvector is one.
    UnitDisplacement,
    /// The right eigenvector has unit Euclidean norm, phased so that its
    /// displacement entry is real and positive.
    UnitBprod,
    /// Unit displacement followed by `Y -> gamma Y`, `X -> X / gamma`.
    Scale(f64),
}

/// The master pair `lambda`, `conj(lambda)` with eigenvectors restricted to the
/// autonomous rows. The second member is the complex conjugate of the first.
#[derive(Clone, Debug)]
pub struct MasterMode {
    pub lambda: C64,
    pub right: CVector,
    pub left: CVector,
    pub normalisation: Normalisation,
    displacement_row: usize,
}

impl MasterMode {
    pub fn eigenvalues(&self) -> [C64; 2] {
        [self.lambda, self.lambda.conj()]
    }

    /// Right eigenvector of member `s` (0 or 1).
    pub fn right(&self, s: usize) -> CVector {
        if s == 0 {
            self.right.clone()
        } else {
            self.right.map(|z| z.conj())
        }
    }

    pub fn left(&self, s: usize) -> CVector {
        if s == 0 {
            self.left.clone()
        } else {
            self.left.map(|z| z.conj())
        }
    }

    /// Undamped natural frequency `|lambda|`.
    pub fn natural_frequency(&self) -> f64 {
        self.lambda.norm()
    }

    pub fn damping_ratio(&self) -> f64 {
        -self.lambda.re / self.lambda.norm()
    }

    /// Displacement entry of the right eigenvector; one under unit-displacement scaling.
    pub fn displacement_amplitude(&self) -> C64 {
        self.right[self.displacement_row]
    }
}

/// Picks the structural pair whose positive imaginary part is closest to `target`.
pub fn select_master(pairs: &[Eigenpair], target: f64, displacement_row: usize) -> Result<MasterMode> {
    let best = pairs
        .iter()
        .filter(|p| p.kind == ModeKind::Structural && p.value.im > 0.0)
        .min_by(|a, b| {
            (a.value.im - target)
                .abs()
                .partial_cmp(&(b.value.im - target).abs())
                .unwrap()
        })
        .ok_or(Error::NoMasterMode(target))?;
    let has_partner = pairs
        .iter()
        .any(|p| (p.value - best.value.conj()).norm() <= 1e-8 * (1.0 + best.value.norm()));
    if !has_partner {
        return Err(Error::InvalidSystem("master eigenvalue has no conjugate partner".into()));
    }
    Ok(MasterMode {
        lambda: best.value,
        right: best.right.clone(),
        left: best.left.clone(),
        normalisation: Normalisation::UnitBprod,
        displacement_row,
    })
}

/// Rescales the master eigenvectors; the left vector always satisfies `x^H B y = 1`.
pub fn normalise(mut mode: MasterMode, b: &CMatrix, how: Normalisation) -> Result<MasterMode> {
    let n = mode.right.len();
    let b = b.view((0, 0), (n, n)).into_owned();
    let pivot = mode.right[mode.displacement_row];
    if pivot.norm() < 1e-300 || !pivot.is_finite() {
        return Err(Error::ZeroPivot);
    }
    match how {
        Normalisation::UnitDisplacement => mode.right /= pivot,
        Normalisation::Scale(gamma) => {
            if gamma == 0.0 || !gamma.is_finite() {
                return Err(Error::ZeroPivot);
            }
            mode.right *= c(gamma, 0.0) / pivot;
        }
        Normalisation::UnitBprod => {
            let phase = pivot / pivot.norm();
            let nrm = norm2(&mode.right);
            mode.right /= phase * nrm;
        }
    }
    let xby = mode.left.dotc(&(&b * &mode.right));
    if xby.norm() < 1e-300 {
        return Err(Error::ZeroPivot);
    }
    mode.left /= xby.conj();
    mode.normalisation = how;
    Ok(mode)
}

/// Master mode of a (possibly forced) system, computed on its autonomous part.
pub fn master_mode(sys: &QuadSystem, target: f64, how: Normalisation) -> Result<MasterMode> {
    let base = sys.base();
    if !base.is_real() {
        return Err(Error::InvalidSystem("master-mode selection needs a real autonomous part".into()));
    }
    let pairs = eigenpairs(&base)?;
    let mode = select_master(&pairs, target, sys.displacement_row())?;
    normalise(mode, base.b(), how)
}

/// Non-resonant forcing eigenvectors `(+-i Omega B - A)^{-1} F_+-` on the autonomous rows.
pub fn forcing_eigenvectors(sys: &QuadSystem) -> Result<[CVector; 2]> {
    let spec = sys
        .forcing()
        .ok_or_else(|| Error::InvalidSystem("system is not forced".into()))?;
    let base = sys.base();
    let (plus, minus) = spec.complex_columns();
    let mut out = [CVector::zeros(0), CVector::zeros(0)];
    for (s, (sign, rhs)) in [(1.0, plus), (-1.0, minus)].into_iter().enumerate() {
        let m = base.b() * (I * spec.omega * sign) - base.a();
        let mut f = Factored::new(m);
        let cond = f.condition_estimate();
        if !cond.is_finite() || cond > 1e12 {
            return Err(Error::Singular(format!(
                "forcing frequency is resonant with the pencil (condition {cond:.3e})"
            )));
        }
        out[s] = f.solve(&rhs)?;
    }
    Ok(out)
}
