//! Quadratic differential-algebraic systems `B y' = A y + Q(y, y)`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, Factored, C64, I};

/// Role of a row (and of the matching state entry).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Physical,
    Algebraic,
    Forcing,
}

/// One stored entry `q[i][j][k]` of the quadratic tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub v: C64,
}

/// Sparse 3-tensor stored symmetrically in its last two indices, so that
/// `Q(a, b) = Q(b, a)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct QuadTensor {
    entries: Vec<QEntry>,
}

impl QuadTensor {
    /// Builds the tensor from coefficients of `y_j y_k` in row `i`.
    /// Repeated triplets accumulate.
    pub fn from_coefficients(items: impl IntoIterator<Item = (usize, usize, usize, C64)>) -> Self {
        let mut map: BTreeMap<(usize, usize, usize), C64> = BTreeMap::new();
        for (i, j, k, v) in items {
            if j == k {
                *map.entry((i, j, k)).or_default() += v;
            } else {
                *map.entry((i, j, k)).or_default() += v * 0.5;
                *map.entry((i, k, j)).or_default() += v * 0.5;
            }
        }
        let entries = map
            .into_iter()
            .filter(|(_, v)| *v != C64::new(0.0, 0.0))
            .map(|((i, j, k), v)| QEntry { i, j, k, v })
            .collect();
        QuadTensor { entries }
    }

    pub fn entries(&self) -> &[QEntry] {
        &self.entries
    }

    /// Coefficients of `y_j y_k` with `j <= k`, the inverse of [`Self::from_coefficients`].
    pub fn coefficients(&self) -> Vec<(usize, usize, usize, C64)> {
        self.entries
            .iter()
            .filter(|e| e.j <= e.k)
            .map(|e| (e.i, e.j, e.k, if e.j == e.k { e.v } else { e.v * 2.0 }))
            .collect()
    }

    /// `out += Q(a, b)`.
    #[inline]
    pub fn accumulate(&self, a: &[C64], b: &[C64], out: &mut [C64]) {
        for e in &self.entries {
            out[e.i] += e.v * a[e.j] * b[e.k];
        }
    }

    /// `out += scale * Q(a, b)`.
    #[inline]
    pub fn accumulate_scaled(&self, scale: C64, a: &[C64], b: &[C64], out: &mut [C64]) {
        for e in &self.entries {
            out[e.i] += scale * e.v * a[e.j] * b[e.k];
        }
    }

    pub fn apply(&self, a: &CVector, b: &CVector) -> CVector {
        let mut out = CVector::zeros(a.len());
        self.accumulate(a.as_slice(), b.as_slice(), out.as_mut_slice());
        out
    }

    fn max_index(&self) -> usize {
        self.entries.iter().map(|e| e.i.max(e.j).max(e.k)).max().unwrap_or(0)
    }
}

/// Harmonic forcing `kappa (Fc cos(Omega t) + Fs sin(Omega t))` added to the right-hand side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    #[serde(rename = "Fc")]
    pub fc: Vec<f64>,
    #[serde(rename = "Fs")]
    pub fs: Vec<f64>,
    pub omega: f64,
    pub kappa: f64,
}

impl ForcingSpec {
    /// Cosine forcing of amplitude `kappa` acting on a single row.
    pub fn cosine(dim: usize, row: usize, omega: f64, kappa: f64) -> Self {
        let mut fc = vec![0.0; dim];
        fc[row] = 1.0;
        ForcingSpec { fc, fs: vec![0.0; dim], omega, kappa }
    }

    /// The complex amplitude vectors multiplying `e^{i Omega t}` and `e^{-i Omega t}`.
    pub fn complex_columns(&self) -> (CVector, CVector) {
        let n = self.fc.len();
        let plus = CVector::from_fn(n, |r, _| c(self.fc[r], -self.fs[r]) * (self.kappa / 2.0));
        let minus = CVector::from_fn(n, |r, _| c(self.fc[r], self.fs[r]) * (self.kappa / 2.0));
        (plus, minus)
    }
}

/// A quadratic system. Physical rows come first, then algebraic rows
/// (zero rows of `B`), then the two forcing rows if the system is forced.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadSystem {
    b: CMatrix,
    a: CMatrix,
    q: QuadTensor,
    n_physical: usize,
    n_algebraic: usize,
    forcing: Option<ForcingSpec>,
    displacement_row: usize,
    velocity_row: Option<usize>,
}

impl QuadSystem {
    pub fn new(b: CMatrix, a: CMatrix, q: QuadTensor, n_physical: usize, n_algebraic: usize) -> Result<Self> {
        let n = n_physical + n_algebraic;
        if n == 0 {
            return Err(Error::InvalidSystem("empty system".into()));
        }
        if b.shape() != (n, n) || a.shape() != (n, n) {
            return Err(Error::InvalidSystem(format!(
                "B is {:?} and A is {:?}, expected {n}x{n}",
                b.shape(),
                a.shape()
            )));
        }
        if q.max_index() >= n {
            return Err(Error::InvalidSystem("quadratic tensor index out of range".into()));
        }
        for r in n_physical..n {
            if b.row(r).iter().any(|z| z.norm() != 0.0) {
                return Err(Error::InvalidSystem(format!("algebraic row {r} of B is not zero")));
            }
        }
        let mut fa = Factored::new(a.clone());
        let cond = fa.condition_estimate();
        if !cond.is_finite() || cond > 1e14 {
            return Err(Error::InvalidSystem(format!("A is singular (condition estimate {cond:.3e})")));
        }
        let velocity_row = if n_physical >= 2 && n_physical % 2 == 0 { Some(n_physical / 2) } else { None };
        Ok(QuadSystem {
            b,
            a,
            q,
            n_physical,
            n_algebraic,
            forcing: None,
            displacement_row: 0,
            velocity_row,
        })
    }

    /// Chooses the rows used as displacement and velocity observables.
    pub fn with_observables(mut self, displacement: usize, velocity: Option<usize>) -> Result<Self> {
        if displacement >= self.n_physical || velocity.is_some_and(|v| v >= self.n_physical) {
            return Err(Error::InvalidSystem("observable rows must be physical".into()));
        }
        self.displacement_row = displacement;
        self.velocity_row = velocity;
        Ok(self)
    }

    /// Appends the two forcing variables `z3 = e^{i Omega t}`, `z4 = e^{-i Omega t}`.
    pub fn augment_forcing(&self, spec: &ForcingSpec) -> Result<QuadSystem> {
        if self.forcing.is_some() {
            return Err(Error::InvalidSystem("system is already forced".into()));
        }
        let n = self.dim();
        if spec.fc.len() != n || spec.fs.len() != n {
            return Err(Error::InvalidSystem(format!("forcing vectors must have length {n}")));
        }
        if !(spec.omega > 0.0) || !spec.kappa.is_finite() {
            return Err(Error::InvalidSystem("forcing frequency must be positive".into()));
        }
        if (self.n_physical..n).any(|r| spec.fc[r] != 0.0 || spec.fs[r] != 0.0) {
            return Err(Error::InvalidSystem("forcing must act on physical rows".into()));
        }
        let m = n + 2;
        let mut b = CMatrix::zeros(m, m);
        let mut a = CMatrix::zeros(m, m);
        b.view_mut((0, 0), (n, n)).copy_from(&self.b);
        a.view_mut((0, 0), (n, n)).copy_from(&self.a);
        let (plus, minus) = spec.complex_columns();
        a.view_mut((0, n), (n, 1)).copy_from(&plus);
        a.view_mut((0, n + 1), (n, 1)).copy_from(&minus);
        b[(n, n)] = c(1.0, 0.0);
        b[(n + 1, n + 1)] = c(1.0, 0.0);
        a[(n, n)] = I * spec.omega;
        a[(n + 1, n + 1)] = -I * spec.omega;
        Ok(QuadSystem {
            b,
            a,
            q: self.q.clone(),
            n_physical: self.n_physical,
            n_algebraic: self.n_algebraic,
            forcing: Some(spec.clone()),
            displacement_row: self.displacement_row,
            velocity_row: self.velocity_row,
        })
    }

    /// The autonomous system with forcing rows removed.
    pub fn base(&self) -> QuadSystem {
        let n = self.base_dim();
        QuadSystem {
            b: self.b.view((0, 0), (n, n)).into_owned(),
            a: self.a.view((0, 0), (n, n)).into_owned(),
            q: self.q.clone(),
            n_physical: self.n_physical,
            n_algebraic: self.n_algebraic,
            forcing: None,
            displacement_row: self.displacement_row,
            velocity_row: self.velocity_row,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    /// Dimension without the forcing rows.
    pub fn base_dim(&self) -> usize {
        self.n_physical + self.n_algebraic
    }

    pub fn n_physical(&self) -> usize {
        self.n_physical
    }

    pub fn n_algebraic(&self) -> usize {
        self.n_algebraic
    }

    pub fn n_forcing(&self) -> usize {
        if self.forcing.is_some() {
            2
        } else {
            0
        }
    }

    pub fn is_forced(&self) -> bool {
        self.forcing.is_some()
    }

    pub fn forcing(&self) -> Option<&ForcingSpec> {
        self.forcing.as_ref()
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn q(&self) -> &QuadTensor {
        &self.q
    }

    pub fn displacement_row(&self) -> usize {
        self.displacement_row
    }

    pub fn velocity_row(&self) -> Option<usize> {
        self.velocity_row
    }

    pub fn row_kind(&self, r: usize) -> RowKind {
        if r < self.n_physical {
            RowKind::Physical
        } else if r < self.base_dim() {
            RowKind::Algebraic
        } else {
            RowKind::Forcing
        }
    }

    /// True when every matrix and tensor entry is real.
    pub fn is_real(&self) -> bool {
        let base = self.base();
        base.b.iter().chain(base.a.iter()).all(|z| z.im == 0.0)
            && self.q.entries.iter().all(|e| e.v.im == 0.0)
    }

    /// `Q(y, y)`.
    pub fn eval_q(&self, y: &CVector) -> CVector {
        self.q.apply(y, y)
    }

    /// `A y + Q(y, y)`.
    pub fn rhs(&self, y: &CVector) -> CVector {
        &self.a * y + self.eval_q(y)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<QuadSystem> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    /// Parses the JSON system format. A `forcing` block yields an augmented system.
    pub fn from_json_str(text: &str) -> Result<QuadSystem> {
        let file: SystemFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidSystem(format!("malformed system file: {e}")))?;
        let n = file.d_p + file.d_a;
        let b = dense_from_json(&file.b, n, "B")?;
        let a = dense_from_json(&file.a, n, "A")?;
        let q = QuadTensor::from_coefficients(file.q.iter().map(|t| t.unpack()));
        let mut sys = QuadSystem::new(b, a, q, file.d_p, file.d_a)?;
        if file.displacement_row.is_some() || file.velocity_row.is_some() {
            let disp = file.displacement_row.unwrap_or(0);
            let vel = file.velocity_row.or(sys.velocity_row);
            sys = sys.with_observables(disp, vel)?;
        }
        match file.forcing {
            Some(f) => sys.augment_forcing(&f),
            None => Ok(sys),
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        let base = self.base();
        let file = SystemFile {
            d_p: self.n_physical,
            d_a: self.n_algebraic,
            b: dense_to_json(&base.b),
            a: dense_to_json(&base.a),
            q: self.q.coefficients().into_iter().map(QTriplet::pack).collect(),
            forcing: self.forcing.clone(),
            displacement_row: Some(self.displacement_row),
            velocity_row: self.velocity_row,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    fn value(&self) -> C64 {
        match *self {
            Scalar::Real(x) => c(x, 0.0),
            Scalar::Complex([re, im]) => c(re, im),
        }
    }

    fn from_value(z: C64) -> Self {
        if z.im.to_bits() == 0 {
            Scalar::Real(z.re)
        } else {
            Scalar::Complex([z.re, z.im])
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum QTriplet {
    Real(usize, usize, usize, f64),
    Complex(usize, usize, usize, [f64; 2]),
}

impl QTriplet {
    fn unpack(&self) -> (usize, usize, usize, C64) {
        match *self {
            QTriplet::Real(i, j, k, v) => (i, j, k, c(v, 0.0)),
            QTriplet::Complex(i, j, k, [re, im]) => (i, j, k, c(re, im)),
        }
    }

    fn pack((i, j, k, v): (usize, usize, usize, C64)) -> Self {
        if v.im.to_bits() == 0 {
            QTriplet::Real(i, j, k, v.re)
        } else {
            QTriplet::Complex(i, j, k, [v.re, v.im])
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SystemFile {
    #[serde(rename = "D_p")]
    d_p: usize,
    #[serde(rename = "D_a")]
    d_a: usize,
    #[serde(rename = "B")]
    b: Vec<Vec<Scalar>>,
    #[serde(rename = "A")]
    a: Vec<Vec<Scalar>>,
    #[serde(rename = "Q", default)]
    q: Vec<QTriplet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forcing: Option<ForcingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    displacement_row: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    velocity_row: Option<usize>,
}

fn dense_from_json(rows: &[Vec<Scalar>], n: usize, name: &str) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidSystem(format!("{name} must be {n}x{n}")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j].value()))
}

fn dense_to_json(m: &CMatrix) -> Vec<Vec<Scalar>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Scalar::from_value(m[(i, j)])).collect())
        .collect()
}

fn real(n: usize, m: usize, v: &[f64]) -> CMatrix {
    CMatrix::from_row_slice(n, m, &v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
}

/// Duffing oscillator `u'' + 2 xi omega u' + omega^2 u + h u^3 = 0`,
/// recast with the auxiliary variable `r = u^2`. State `(u, v, r)`.
pub fn duffing(omega: f64, xi: f64, h: f64) -> QuadSystem {
    let b = real(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let a = real(
        3,
        3,
        &[0.0, 1.0, 0.0, -omega * omega, -2.0 * xi * omega, 0.0, 0.0, 0.0, 1.0],
    );
    let q = QuadTensor::from_coefficients([(1, 0, 2, c(-h, 0.0)), (2, 0, 0, c(-1.0, 0.0))]);
    QuadSystem::new(b, a, q, 2, 1).expect("Duffing system is well formed")
}

/// Parameters of the two-degree-of-freedom oscillator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoDofParams {
    pub omega1: f64,
    pub omega2: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub h1: f64,
    pub h2: f64,
}

impl Default for TwoDofParams {
    fn default() -> Self {
        TwoDofParams { omega1: 1.0, omega2: 1.57, xi1: 0.0, xi2: 0.0, h1: 1.0, h2: 1.0 }
    }
}

/// Two coupled oscillators
/// `u1'' + 2 xi1 w1 u1' + w1^2 u1 + h1 u1^3 + 3 h2 u1^2 u2 = 0`,
/// `u2'' + 2 xi2 w2 u2' + w2^2 u2 + h2 u1^3 = 0`,
/// recast with `r = u1^2`. State `(u1, u2, v1, v2, r)`.
pub fn two_dof(p: TwoDofParams) -> QuadSystem {
    let mut b = CMatrix::zeros(5, 5);
    for i in 0..4 {
        b[(i, i)] = c(1.0, 0.0);
    }
    let mut a = CMatrix::zeros(5, 5);
    a[(0, 2)] = c(1.0, 0.0);
    a[(1, 3)] = c(1.0, 0.0);
    a[(2, 0)] = c(-p.omega1 * p.omega1, 0.0);
    a[(2, 2)] = c(-2.0 * p.xi1 * p.omega1, 0.0);
    a[(3, 1)] = c(-p.omega2 * p.omega2, 0.0);
    a[(3, 3)] = c(-2.0 * p.xi2 * p.omega2, 0.0);
    a[(4, 4)] = c(1.0, 0.0);
    let q = QuadTensor::from_coefficients([
        (2, 0, 4, c(-p.h1, 0.0)),
        (2, 1, 4, c(-3.0 * p.h2, 0.0)),
        (3, 0, 4, c(-p.h2, 0.0)),
        (4, 0, 0, c(-1.0, 0.0)),
    ]);
    QuadSystem::new(b, a, q, 4, 1).expect("two-DOF system is well formed")
}
