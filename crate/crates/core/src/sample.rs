//! Random instances for property checks: Gaussian matrices, Haar unitaries,
//! passive operators, state sets and density matrices.

#[allow(unused_imports)]
use crate::Float;
use alloc::vec::Vec;

use nalgebra::linalg::QR;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::numkernel::{spectral_norm, CMatrix, CVector, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| gaussian(rng))
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    gaussian_vector(rng, n).normalize()
}

/// Haar-distributed unitary via QR of a Gaussian matrix with the phases of
/// R's diagonal folded back into Q.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let qr = QR::new(gaussian_matrix(rng, n, n));
    let mut q = qr.q();
    let r = qr.r();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::from(1.0) };
        col *= phase;
    }
    q
}

/// Hermitian matrix `(G + G†)/2` with Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n, n);
    (&g + g.adjoint()) * C64::from(0.5)
}

/// Random contraction: Haar unitaries around singular values drawn from
/// `[0, 1]`, with the largest set to 1 when `marginal`.
pub fn random_passive<R: Rng + ?Sized>(rng: &mut R, n: usize, marginal: bool) -> CMatrix {
    let mut s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    if marginal && n > 0 {
        s[0] = 1.0;
    }
    let left = haar_unitary(rng, n);
    let right = haar_unitary(rng, n);
    let mut scaled = left;
    for (mut col, &v) in scaled.column_iter_mut().zip(&s) {
        col *= C64::from(v);
    }
    scaled * right.adjoint()
}

/// Generic contraction by rescaling a Gaussian matrix below unit norm.
pub fn random_contraction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n, n);
    let norm = spectral_norm(&g).unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let shrink = rng.random_range(0.3..1.0);
    g * C64::from(shrink / norm)
}

/// `n` random unit states in dimension `n`; linearly independent with
/// probability one.
pub fn random_states<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<CVector> {
    (0..n).map(|_| random_state(rng, n)).collect()
}

/// Full-rank density matrix `GG†/tr(GG†)`.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n, n);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    let rho = rho / C64::from(tr);
    (&rho + rho.adjoint()) * C64::from(0.5)
}

/// `diag(u_s, u_a)` with independent Haar blocks.
pub fn random_block_diagonal<R: Rng + ?Sized>(rng: &mut R, n_sys: usize, n_anc: usize) -> CMatrix {
    let us = haar_unitary(rng, n_sys);
    let ua = haar_unitary(rng, n_anc);
    crate::numkernel::block_diag(&us, &ua)
}
