//! Dense complex linear algebra: SVD, polar decomposition, the unitary
//! exponential and logarithm, and the two unitarily invariant norms the
//! cost functionals are stated in.
//!
//! Factorizations are delegated to `nalgebra`; this module fixes the
//! conventions (descending singular values, principal eigenangle branch)
//! and validates inputs.

#[allow(unused_imports)]
use crate::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::linalg::Schur;
use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tol::Tolerances;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const IM: C64 = C64::new(0.0, 1.0);

/// Which unitarily invariant norm a cost is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    /// Largest singular value.
    Spectral,
    /// Square root of the sum of squared singular values.
    HilbertSchmidt,
}

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left singular vectors as columns.
    pub left: CMatrix,
    /// Singular values, descending.
    pub singulars: Vec<f64>,
    /// Right singular vectors as columns, so `a = left * diag(s) * right†`.
    pub right: CMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.left.clone();
        for (mut col, &s) in scaled.column_iter_mut().zip(&self.singulars) {
            col *= C64::from(s);
        }
        scaled * self.right.adjoint()
    }

    pub fn max(&self) -> f64 {
        self.singulars.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.singulars.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct PolarResult {
    pub unitary_factor: CMatrix,
    /// Hermitian positive semidefinite, `a = unitary_factor * positive_factor`.
    pub positive_factor: CMatrix,
}

pub fn ensure_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.is_square() {
        Ok(a.nrows())
    } else {
        Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }
}

/// Largest entrywise magnitude of `a - a†`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Largest entrywise magnitude of `u†u - I`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Checks Hermiticity relative to the scale of `h`.
pub fn ensure_hermitian(h: &CMatrix, tol: f64) -> Result<()> {
    ensure_finite(h)?;
    ensure_square(h)?;
    let deviation = hermiticity_defect(h);
    if deviation <= tol * max_abs(h).max(1.0) {
        Ok(())
    } else {
        Err(Error::NotHermitian { deviation })
    }
}

pub fn ensure_unitary(u: &CMatrix, tol: f64) -> Result<()> {
    ensure_finite(u)?;
    ensure_square(u)?;
    let deviation = unitarity_defect(u);
    if deviation <= tol {
        Ok(())
    } else {
        Err(Error::NotUnitary { deviation })
    }
}

/// Thin SVD with singular values sorted in descending order.
pub fn svd(a: &CMatrix) -> Result<SvdResult> {
    ensure_finite(a)?;
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(SvdResult {
            left: CMatrix::zeros(m, 0),
            singulars: Vec::new(),
            right: CMatrix::zeros(n, 0),
        });
    }
    let raw = a.clone().svd(true, true);
    let u = raw.u.expect("left vectors requested");
    let v_t = raw.v_t.expect("right vectors requested");

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| raw.singular_values[j].total_cmp(&raw.singular_values[i]));

    let mut left = CMatrix::zeros(m, k);
    let mut right = CMatrix::zeros(n, k);
    let mut singulars = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        left.set_column(dst, &u.column(src));
        right.set_column(dst, &v_t.row(src).adjoint());
        singulars.push(raw.singular_values[src].max(0.0));
    }
    Ok(SvdResult {
        left,
        singulars,
        right,
    })
}

pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.singulars)
}

/// Polar decomposition `a = unitary * positive` of a square matrix.
pub fn polar(a: &CMatrix) -> Result<PolarResult> {
    ensure_square(a)?;
    let s = svd(a)?;
    let positive_factor = weighted_projector_sum(&s.right, &s.singulars);
    Ok(PolarResult {
        unitary_factor: &s.left * s.right.adjoint(),
        positive_factor,
    })
}

/// `vecs * diag(weights) * vecs†` for real weights; exactly Hermitian.
pub(crate) fn weighted_projector_sum(vecs: &CMatrix, weights: &[f64]) -> CMatrix {
    let mut scaled = vecs.clone();
    for (mut col, &w) in scaled.column_iter_mut().zip(weights) {
        col *= C64::from(w);
    }
    let out = scaled * vecs.adjoint();
    (&out + out.adjoint()) * C64::from(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = ensure_square(h)?;
    ensure_finite(h)?;
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let sym = (h + h.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vecs = CMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
        vals.push(eig.eigenvalues[src]);
    }
    Ok((vals, vecs))
}

pub fn min_eigenvalue(h: &CMatrix) -> Result<f64> {
    let (vals, _) = hermitian_eigen(h)?;
    Ok(vals.first().copied().unwrap_or(0.0))
}

/// `exp(-i h t)` for Hermitian `h`, through its eigendecomposition.
pub fn exp_unitary(h: &CMatrix, t: f64) -> Result<CMatrix> {
    ensure_hermitian(h, Tolerances::DEFAULT.hermitian)?;
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let (vals, vecs) = hermitian_eigen(h)?;
    let mut scaled = vecs.clone();
    for (mut col, &lambda) in scaled.column_iter_mut().zip(&vals) {
        col *= C64::from_polar(1.0, -lambda * t);
    }
    Ok(scaled * vecs.adjoint())
}

/// Maps an angle into the principal branch `(-π, π]`.
pub fn principal_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    // atan2 yields -π for eigenvalues that are -1 up to a negative-zero or
    // roundoff imaginary part; those belong to the +π end of the branch.
    if a <= -PI + 1e-12 {
        a = PI;
    }
    a
}

fn unitary_schur(u: &CMatrix) -> Result<(CMatrix, Vec<f64>)> {
    ensure_unitary(u, Tolerances::DEFAULT.unitary)?;
    let n = u.nrows();
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), Vec::new()));
    }
    let (q, t) = Schur::new(u.clone()).unpack();
    let angles = (0..n).map(|i| principal_angle(t[(i, i)].arg())).collect();
    Ok((q, angles))
}

/// Eigenangles of a unitary in the principal branch `(-π, π]`.
pub fn eigenphases(u: &CMatrix) -> Result<Vec<f64>> {
    Ok(unitary_schur(u)?.1)
}

/// Principal logarithm: skew-Hermitian `L` with `exp(L) = u`.
pub fn log_unitary(u: &CMatrix) -> Result<CMatrix> {
    let (q, angles) = unitary_schur(u)?;
    let mut scaled = q.clone();
    for (mut col, &a) in scaled.column_iter_mut().zip(&angles) {
        col *= C64::new(0.0, a);
    }
    let l = scaled * q.adjoint();
    Ok((&l - l.adjoint()) * C64::from(0.5))
}

pub fn spectral_norm(a: &CMatrix) -> Result<f64> {
    Ok(svd(a)?.max())
}

pub fn hs_norm(a: &CMatrix) -> Result<f64> {
    ensure_finite(a)?;
    Ok(a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

pub fn norm(a: &CMatrix, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Spectral => spectral_norm(a),
        NormKind::HilbertSchmidt => hs_norm(a),
    }
}

/// Norm of a diagonalizable operator given its (real) spectrum magnitudes.
pub(crate) fn norm_of_spectrum(values: impl Iterator<Item = f64>, kind: NormKind) -> f64 {
    match kind {
        NormKind::Spectral => values.map(f64::abs).fold(0.0, f64::max),
        NormKind::HilbertSchmidt => values.map(|v| v * v).sum::<f64>().sqrt(),
    }
}

pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Rotation angle whose cosine is the singular value `s`, computed without
/// the cancellation of `acos` near 1 or `asin(√(1-s²))` near 0.
pub fn transfer_angle(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    ((1.0 - s) * (1.0 + s)).sqrt().atan2(s)
}
