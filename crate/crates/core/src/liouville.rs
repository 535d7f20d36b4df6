//! Liouville-space vectorization, inner products and superoperator moments.
//!
//! Vectorization is column stacking: flat index `d*j + i` holds `A[i][j]`,
//! so `vec(A B C) = (Cᵀ ⊗ A) vec(B)` holds literally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, exact_sqrt, CMat, CVec, C64};

/// Validation tolerances for density matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace: f64,
    pub positivity: f64,
    pub purity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-12,
            trace: 1e-12,
            positivity: 1e-10,
            purity: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        Self::validated(mat, &Tolerances::default(), 0.0)
    }

    /// Validates `mat` with explicit tolerances; `t` only labels errors.
    pub fn validated(mat: CMat, tol: &Tolerances, t: f64) -> Result<Self> {
        let bad = |reason: String| Error::InvalidState { t, reason };
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::dim(format!(
                "density matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let d = mat.nrows();
        let herm = linalg::hermiticity_defect(&mat);
        if herm > tol.hermitian {
            return Err(bad(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = mat.trace();
        if (tr - c(1.0, 0.0)).norm() > tol.trace {
            return Err(bad(format!("trace {} differs from 1", tr.re)));
        }
        let min = linalg::min_eigenvalue(&mat);
        if min < -tol.positivity {
            return Err(bad(format!("negative eigenvalue {min:e}")));
        }
        let p = purity_of(&mat);
        if p < 1.0 / d as f64 - tol.purity || p > 1.0 + tol.purity {
            return Err(bad(format!("purity {p} outside [1/d, 1]")));
        }
        Ok(DensityMatrix { mat })
    }

    pub(crate) fn from_unchecked(mat: CMat) -> Self {
        DensityMatrix { mat }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn from_pure(psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v = psi.unscale(n);
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            mat: linalg::identity(d).unscale(d as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn purity(&self) -> f64 {
        purity_of(&self.mat)
    }
}

fn purity_of(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleVector {
    data: CVec,
    dim: usize,
}

impl LiouvilleVector {
    pub fn new(data: CVec) -> Result<Self> {
        let dim = exact_sqrt(data.len())
            .ok_or_else(|| Error::dim(format!("length {} is not a perfect square", data.len())))?;
        Ok(LiouvilleVector { data, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dim_sq(&self) -> usize {
        self.data.len()
    }

    pub fn as_vec(&self) -> &CVec {
        &self.data
    }

    pub fn into_vec(self) -> CVec {
        self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.norm_squared()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    mat: CMat,
    dim: usize,
}

impl Superoperator {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::dim(format!(
                "superoperator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let dim = exact_sqrt(mat.nrows())
            .ok_or_else(|| Error::dim(format!("side {} is not a perfect square", mat.nrows())))?;
        Ok(Superoperator { mat, dim })
    }

    pub(crate) fn from_raw(mat: CMat) -> Self {
        let dim = exact_sqrt(mat.nrows()).expect("superoperator side must be d^2");
        Superoperator { mat, dim }
    }

    pub fn identity(d: usize) -> Self {
        Superoperator::from_raw(linalg::identity(d * d))
    }

    pub fn zero(d: usize) -> Self {
        Superoperator::from_raw(linalg::zeros(d * d))
    }

    /// Hilbert-space dimension d (the matrix side is d²).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Superoperator {
            mat: self.mat.adjoint(),
            dim: self.dim,
        }
    }

    pub fn apply(&self, v: &LiouvilleVector) -> Result<LiouvilleVector> {
        if v.dim_sq() != self.mat.ncols() {
            return Err(Error::dim(format!(
                "superoperator side {} vs vector length {}",
                self.mat.ncols(),
                v.dim_sq()
            )));
        }
        Ok(LiouvilleVector {
            data: &self.mat * &v.data,
            dim: self.dim,
        })
    }

    pub fn op_norm(&self) -> f64 {
        linalg::op_norm(&self.mat)
    }

    pub fn hs_norm(&self) -> f64 {
        linalg::hs_norm(&self.mat)
    }
}

/// Unit-norm Liouville vector `|ρ̃)) = |ρ))/√tr ρ²` together with the purity.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedState {
    vector: LiouvilleVector,
    purity: f64,
}

impl NormalizedState {
    /// Normalizes an arbitrary nonzero Liouville vector; `purity` is its squared norm.
    pub fn from_unnormalized(v: LiouvilleVector) -> Result<Self> {
        let p = v.norm_sqr();
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("cannot normalize vector of norm² {p}")));
        }
        let data = v.data.unscale(p.sqrt());
        Ok(NormalizedState {
            vector: LiouvilleVector { data, dim: v.dim },
            purity: p,
        })
    }

    pub fn vector(&self) -> &LiouvilleVector {
        &self.vector
    }

    pub fn as_vec(&self) -> &CVec {
        &self.vector.data
    }

    pub fn purity(&self) -> f64 {
        self.purity
    }

    pub fn dim(&self) -> usize {
        self.vector.dim
    }

    /// `𝓟 = |ρ̃))((ρ̃|`.
    pub fn projector(&self) -> Superoperator {
        let v = &self.vector.data;
        Superoperator::from_raw(v * v.adjoint())
    }
}

pub fn vectorize(a: &CMat) -> Result<LiouvilleVector> {
    if a.nrows() != a.ncols() {
        return Err(Error::dim(format!(
            "cannot vectorize {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    // nalgebra storage is column-major, which is exactly column stacking.
    Ok(LiouvilleVector {
        data: CVec::from_column_slice(a.as_slice()),
        dim: a.nrows(),
    })
}

pub fn devectorize(v: &LiouvilleVector) -> CMat {
    CMat::from_column_slice(v.dim, v.dim, v.data.as_slice())
}

/// `tr(A†B)` for vectorized operators.
pub fn inner(a: &LiouvilleVector, b: &LiouvilleVector) -> Result<C64> {
    if a.dim_sq() != b.dim_sq() {
        return Err(Error::dim(format!(
            "inner product of lengths {} and {}",
            a.dim_sq(),
            b.dim_sq()
        )));
    }
    Ok(a.data.dotc(&b.data))
}

pub fn normalize_state(rho: &DensityMatrix) -> NormalizedState {
    let v = vectorize(rho.matrix()).expect("density matrices are square");
    NormalizedState::from_unnormalized(v).expect("density matrices have positive purity")
}

/// Angle between two Liouville vectors, `arccos(Re(a|b)/(|a||b|))`.
///
/// Near-parallel vectors use the chord `2 asin(|â - b̂|/2)` instead, which
/// keeps full relative precision where arccos is ill-conditioned.
pub fn vector_angle(a: &CVec, b: &CVec) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let cos = a.dotc(b).re / (na * nb);
    if cos > 0.9 {
        let chord = (a.unscale(na) - b.unscale(nb)).norm();
        2.0 * (0.5 * chord).min(1.0).asin()
    } else {
        cos.clamp(-1.0, 1.0).acos()
    }
}

pub fn liouville_angle(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::dim(format!("angle between d={} and d={}", a.dim(), b.dim())));
    }
    let va = vectorize(a.matrix())?;
    let vb = vectorize(b.matrix())?;
    Ok(vector_angle(va.as_vec(), vb.as_vec()))
}

/// `Cᵀ ⊗ A`, the superoperator of `B ↦ A B C`.
pub fn sandwich_superop(a: &CMat, cm: &CMat) -> Result<Superoperator> {
    if a.nrows() != a.ncols() || cm.nrows() != cm.ncols() || a.nrows() != cm.nrows() {
        return Err(Error::dim("sandwich operands must be square of equal size"));
    }
    Ok(Superoperator::from_raw(linalg::kron(&cm.transpose(), a)))
}

fn check_pair(o: &Superoperator, s: &NormalizedState) -> Result<()> {
    if o.matrix().nrows() != s.vector.dim_sq() {
        return Err(Error::dim(format!(
            "superoperator side {} vs state length {}",
            o.matrix().nrows(),
            s.vector.dim_sq()
        )));
    }
    Ok(())
}

/// `(ρ̃|O|ρ̃) = tr(O𝓟)`.
pub fn superop_expectation(o: &Superoperator, s: &NormalizedState) -> Result<C64> {
    check_pair(o, s)?;
    let v = s.as_vec();
    Ok(v.dotc(&(o.matrix() * v)))
}

/// `tr(A†B𝓟) − tr(A†𝓟) tr(B𝓟)`.
pub fn superop_covariance(a: &Superoperator, b: &Superoperator, s: &NormalizedState) -> Result<C64> {
    check_pair(a, s)?;
    check_pair(b, s)?;
    let v = s.as_vec();
    let av = a.matrix() * v;
    let bv = b.matrix() * v;
    Ok(av.dotc(&bv) - v.dotc(&av).conj() * v.dotc(&bv))
}

/// `(ΔO)² = tr(O†O𝓟) − tr(O†𝓟) tr(O𝓟)`, clipped at zero.
pub fn superop_variance(o: &Superoperator, s: &NormalizedState) -> Result<f64> {
    let var = superop_covariance(o, o, s)?.re;
    if var < -1e-10 {
        return Err(Error::NumericalConsistency {
            quantity: "superoperator variance".into(),
            value: var,
        });
    }
    Ok(var.max(0.0))
}

/// Row-major JSON form `{"dim", "re", "im"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let d = m.nrows();
        let rows = |f: fn(&C64) -> f64| {
            (0..d)
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        MatrixJson {
            dim: d,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let d = self.dim;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&self.re) {
            return Err(Error::dim(format!("\"re\" is not {d}x{d}")));
        }
        if !self.im.is_empty() && !shape_ok(&self.im) {
            return Err(Error::dim(format!("\"im\" is not {d}x{d}")));
        }
        Ok(CMat::from_fn(d, d, |i, j| {
            let im = if self.im.is_empty() { 0.0 } else { self.im[i][j] };
            c(self.re[i][j], im)
        }))
    }
}
