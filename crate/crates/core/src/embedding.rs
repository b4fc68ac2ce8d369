//! The canonical unitary embedding of a lossy operator and its cost.
//!
//! For `K = u_s 𝒦` (polar form) with `𝒦 = u_K cosΘ u_K†`, the embedding
//!
//! ```text
//!     W = | u_K cosΘ u_K†        -i u_K sinΘ u_D† |
//!         | -i u_D sinΘ u_K†     u_D cosΘ u_D†    |
//! ```
//!
//! keeps both diagonal blocks positive and is generated in time `T` by the
//! block off-diagonal Hamiltonian `(1/T)[[0, u_K Θ u_D†], [u_D Θ u_K†, 0]]`.
//! Its spectral norm action is `max Θ = arcsin √(1 - s_min²)`, the least
//! action of any embedding realizing the same POVM.
//!
//! Internally only the system directions with non-zero angle need an
//! ancilla partner, which is what lets the ancilla be cropped or padded.

#[allow(unused_imports)]
use crate::Float;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numkernel::{
    block_diag, eigenphases, ensure_unitary, exp_unitary, hermitian_eigen, max_abs,
    norm_of_spectrum, polar, spectral_norm, svd, transfer_angle, unitarity_defect,
    weighted_projector_sum, CMatrix, CVector, NormKind, C64, IM,
};
use crate::tol::Tolerances;
use crate::usd::LossyOperator;

#[derive(Debug, Clone)]
pub struct CanonicalEmbedding {
    u_k: CMatrix,
    theta: Vec<f64>,
    /// System directions (columns of `u_k`) coupled to the ancilla, in the
    /// same order as the columns of `u_d`.
    coupled: Vec<usize>,
    /// `n_anc × coupled.len()` isometry.
    u_d: CMatrix,
    w: CMatrix,
}

impl CanonicalEmbedding {
    /// Assembles `W` from its parameters.
    ///
    /// `theta[i]` must lie in `[0, π/2]` and be zero for directions not in
    /// `coupled`.
    pub fn from_parts(
        u_k: CMatrix,
        theta: Vec<f64>,
        coupled: Vec<usize>,
        u_d: CMatrix,
    ) -> Result<Self> {
        let n = u_k.nrows();
        ensure_unitary(&u_k, Tolerances::DEFAULT.unitary)?;
        if theta.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: theta.len(),
            });
        }
        if u_d.ncols() != coupled.len() {
            return Err(Error::DimensionMismatch {
                expected: coupled.len(),
                found: u_d.ncols(),
            });
        }
        if coupled.iter().any(|&i| i >= n) {
            return Err(Error::InvalidArgument("coupled index out of range".into()));
        }
        if theta
            .iter()
            .any(|&t| !(0.0..=core::f64::consts::FRAC_PI_2).contains(&t))
        {
            return Err(Error::InvalidArgument("angles must lie in [0, pi/2]".into()));
        }
        if (0..n).any(|i| !coupled.contains(&i) && theta[i] != 0.0) {
            return Err(Error::InvalidArgument(
                "uncoupled direction has a non-zero angle".into(),
            ));
        }
        let iso_defect = unitarity_defect(&u_d);
        if iso_defect > Tolerances::DEFAULT.unitary {
            return Err(Error::NotUnitary {
                deviation: iso_defect,
            });
        }
        let w = assemble(&u_k, &theta, &coupled, &u_d);
        Ok(Self {
            u_k,
            theta,
            coupled,
            u_d,
            w,
        })
    }

    pub fn n_sys(&self) -> usize {
        self.u_k.nrows()
    }

    pub fn n_anc(&self) -> usize {
        self.u_d.nrows()
    }

    pub fn dim(&self) -> usize {
        self.n_sys() + self.n_anc()
    }

    pub fn u_k(&self) -> &CMatrix {
        &self.u_k
    }

    pub fn u_d(&self) -> &CMatrix {
        &self.u_d
    }

    /// Rotation angles `Θ_ii`, one per system direction (column of `u_K`).
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn max_theta(&self) -> f64 {
        self.theta.iter().copied().fold(0.0, f64::max)
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    /// Positive system block `𝒦`.
    pub fn system_block(&self) -> CMatrix {
        self.w.view((0, 0), (self.n_sys(), self.n_sys())).into_owned()
    }

    /// Upper-right block `ℬ` (ancilla to system).
    pub fn b_block(&self) -> CMatrix {
        let n = self.n_sys();
        self.w.view((0, n), (n, self.n_anc())).into_owned()
    }

    /// Lower-left block `𝒞` (system to ancilla).
    pub fn c_block(&self) -> CMatrix {
        let n = self.n_sys();
        self.w.view((n, 0), (self.n_anc(), n)).into_owned()
    }

    pub fn d_block(&self) -> CMatrix {
        let n = self.n_sys();
        let m = self.n_anc();
        self.w.view((n, n), (m, m)).into_owned()
    }

    /// Replaces the ancilla basis with another isometry of the same shape.
    pub fn with_ancilla_basis(&self, u_d: CMatrix) -> Result<Self> {
        if u_d.shape() != self.u_d.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.u_d.nrows(),
                found: u_d.nrows(),
            });
        }
        Self::from_parts(self.u_k.clone(), self.theta.clone(), self.coupled.clone(), u_d)
    }

    /// Multiplies every angle by `factor`. Used to inject faults when
    /// exercising the verification suite.
    #[doc(hidden)]
    pub fn with_scaled_angles(&self, factor: f64) -> Result<Self> {
        let theta = self
            .theta
            .iter()
            .map(|t| (t * factor).clamp(0.0, core::f64::consts::FRAC_PI_2))
            .collect();
        Self::from_parts(self.u_k.clone(), theta, self.coupled.clone(), self.u_d.clone())
    }

    /// Checks unitarity of `W`, positivity of the diagonal blocks and the
    /// sine structure of the off-diagonal blocks.
    pub fn check_invariants(&self, tol: &Tolerances) -> Result<()> {
        let deviation = unitarity_defect(&self.w);
        if deviation > tol.unitary {
            return Err(Error::NotUnitary { deviation });
        }
        for block in [self.system_block(), self.d_block()] {
            if block.nrows() == 0 {
                continue;
            }
            let (vals, _) = hermitian_eigen(&block)?;
            if vals[0] < -tol.psd || crate::numkernel::hermiticity_defect(&block) > tol.unitary {
                return Err(Error::InvalidArgument(
                    "diagonal block is not positive semidefinite".into(),
                ));
            }
        }
        let (b, c) = off_diagonal(&self.u_k, &self.theta, &self.coupled, &self.u_d);
        let deviation = max_abs(&(b - self.b_block())).max(max_abs(&(c - self.c_block())));
        if deviation > tol.unitary {
            return Err(Error::RelationMismatch {
                what: "off-diagonal block structure",
                expected: 0.0,
                found: deviation,
            });
        }
        Ok(())
    }

    /// Generator `G` with `W = exp(-iG)`; `H_opt = G/T`.
    fn generator(&self) -> CMatrix {
        let n = self.n_sys();
        let m = self.n_anc();
        let kc = self.coupled_columns();
        let angles: Vec<f64> = self.coupled.iter().map(|&i| self.theta[i]).collect();
        let upper = scale_columns(&kc, &angles) * self.u_d.adjoint();
        let mut g = CMatrix::zeros(n + m, n + m);
        g.view_mut((0, n), (n, m)).copy_from(&upper);
        g.view_mut((n, 0), (m, n)).copy_from(&upper.adjoint());
        g
    }

    fn coupled_columns(&self) -> CMatrix {
        columns(&self.u_k, &self.coupled)
    }
}

fn columns(a: &CMatrix, idx: &[usize]) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows(), idx.len());
    for (dst, &src) in idx.iter().enumerate() {
        out.set_column(dst, &a.column(src));
    }
    out
}

fn scale_columns(a: &CMatrix, weights: &[f64]) -> CMatrix {
    let mut out = a.clone();
    for (mut col, &w) in out.column_iter_mut().zip(weights) {
        col *= C64::from(w);
    }
    out
}

fn off_diagonal(u_k: &CMatrix, theta: &[f64], coupled: &[usize], u_d: &CMatrix) -> (CMatrix, CMatrix) {
    let kc = columns(u_k, coupled);
    let sines: Vec<f64> = coupled.iter().map(|&i| theta[i].sin()).collect();
    let b = scale_columns(&kc, &sines) * u_d.adjoint() * (-IM);
    let c = scale_columns(u_d, &sines) * kc.adjoint() * (-IM);
    (b, c)
}

fn assemble(u_k: &CMatrix, theta: &[f64], coupled: &[usize], u_d: &CMatrix) -> CMatrix {
    let n = u_k.nrows();
    let m = u_d.nrows();
    let cosines: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let kk = weighted_projector_sum(u_k, &cosines);
    let losses: Vec<f64> = coupled.iter().map(|&i| 1.0 - theta[i].cos()).collect();
    let dd = CMatrix::identity(m, m) - weighted_projector_sum(u_d, &losses);
    let (b, c) = off_diagonal(u_k, theta, coupled, u_d);
    let mut w = CMatrix::zeros(n + m, n + m);
    w.view_mut((0, 0), (n, n)).copy_from(&kk);
    w.view_mut((0, n), (n, m)).copy_from(&b);
    w.view_mut((n, 0), (m, n)).copy_from(&c);
    w.view_mut((n, n), (m, m)).copy_from(&dd);
    w
}

/// Minimal-cost embedding of the positive part of `K`, with `u_D = u_K`.
pub fn canonical_embedding(k: &LossyOperator) -> Result<CanonicalEmbedding> {
    let s = svd(k.matrix())?;
    let theta: Vec<f64> = k.singulars().iter().map(|&v| transfer_angle(v)).collect();
    let coupled = (0..k.dim()).collect();
    CanonicalEmbedding::from_parts(s.right.clone(), theta, coupled, s.right)
}

/// Unitary whose upper-left block is `K` itself: `diag(u_s, I) W`.
pub fn exact_embedding(k: &LossyOperator) -> Result<CMatrix> {
    let e = canonical_embedding(k)?;
    let u_s = polar(k.matrix())?.unitary_factor;
    let v = block_diag(&u_s, &CMatrix::identity(e.n_anc(), e.n_anc()));
    Ok(v * e.w())
}

/// Time-independent generator of the canonical embedding.
#[derive(Debug, Clone)]
pub struct HamiltonianOpt {
    pub matrix: CMatrix,
    pub duration: f64,
}

pub fn optimal_hamiltonian(e: &CanonicalEmbedding, t: f64) -> Result<HamiltonianOpt> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument("duration must be positive".into()));
    }
    Ok(HamiltonianOpt {
        matrix: e.generator() / C64::from(t),
        duration: t,
    })
}

/// Time-energy cost of embedding a lossy operator.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub singulars: Vec<f64>,
    pub s_min: f64,
    /// `1 - s_min² = ‖ℬ‖²`: the largest population share the embedding
    /// moves from system to ancilla.
    pub max_transfer_fraction: f64,
    /// Spectral norm action, `arcsin √(1 - s_min²)`.
    pub spectral_action: f64,
    /// Hilbert-Schmidt norm action, `√(2 Σ_i arcsin²√(1 - s_i²))`.
    pub hs_action: f64,
}

impl CostReport {
    pub fn action(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Spectral => self.spectral_action,
            NormKind::HilbertSchmidt => self.hs_action,
        }
    }
}

pub fn cost_report(k: &LossyOperator) -> CostReport {
    let singulars = k.singulars().to_vec();
    let s_min = k.s_min();
    let angles: Vec<f64> = singulars.iter().map(|&s| transfer_angle(s)).collect();
    CostReport {
        s_min,
        max_transfer_fraction: (1.0 - s_min) * (1.0 + s_min),
        spectral_action: transfer_angle(s_min),
        hs_action: (2.0 * angles.iter().map(|a| a * a).sum::<f64>()).sqrt(),
        singulars,
    }
}

/// `arcsin √(1 - 1/‖K⁻¹‖²)`, defined when `K` is invertible.
pub fn spectral_action_from_inverse(k: &LossyOperator) -> Option<f64> {
    let inv = k.matrix().clone().try_inverse()?;
    let norm = spectral_norm(&inv).ok()?;
    Some((1.0 - 1.0 / (norm * norm)).max(0.0).sqrt().asin())
}

/// `V W` with `V = diag(u_s, u_a)`.
pub fn perturbed_embedding(e: &CanonicalEmbedding, u_s: &CMatrix, u_a: &CMatrix) -> Result<CMatrix> {
    if u_s.shape() != (e.n_sys(), e.n_sys()) {
        return Err(Error::DimensionMismatch {
            expected: e.n_sys(),
            found: u_s.nrows(),
        });
    }
    if u_a.shape() != (e.n_anc(), e.n_anc()) {
        return Err(Error::DimensionMismatch {
            expected: e.n_anc(),
            found: u_a.nrows(),
        });
    }
    ensure_unitary(u_s, Tolerances::DEFAULT.unitary)?;
    ensure_unitary(u_a, Tolerances::DEFAULT.unitary)?;
    Ok(block_diag(u_s, u_a) * e.w())
}

/// `‖log u‖` with eigenangles in `(-π, π]`: the least norm action of any
/// schedule generating `u`.
pub fn unitary_action(u: &CMatrix, kind: NormKind) -> Result<f64> {
    Ok(norm_of_spectrum(eigenphases(u)?.into_iter(), kind))
}

/// `arccos |<ψ|𝒦|ψ>|` for a unit system state.
pub fn rotation_angle(psi: &CVector, e: &CanonicalEmbedding) -> Result<f64> {
    if psi.len() != e.n_sys() {
        return Err(Error::DimensionMismatch {
            expected: e.n_sys(),
            found: psi.len(),
        });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > Tolerances::DEFAULT.normalization {
        return Err(Error::NotNormalized { index: 0, norm });
    }
    let overlap = psi.dotc(&(e.system_block() * psi)).norm();
    Ok(overlap.min(1.0).acos())
}

/// Drops ancilla directions paired with angles below `tol` (unit singular
/// values). The ancilla levels of the result are the retained directions.
pub fn reduce_ancilla(e: &CanonicalEmbedding, tol: f64) -> Result<CanonicalEmbedding> {
    let mut theta = e.theta.clone();
    let mut coupled = Vec::new();
    for &i in &e.coupled {
        if theta[i] >= tol {
            coupled.push(i);
        } else {
            theta[i] = 0.0;
        }
    }
    let m = coupled.len();
    CanonicalEmbedding::from_parts(e.u_k.clone(), theta, coupled, CMatrix::identity(m, m))
}

/// Pads the ancilla with idle levels.
pub fn extend_ancilla(e: &CanonicalEmbedding, n_anc_new: usize) -> Result<CanonicalEmbedding> {
    if n_anc_new < e.n_anc() {
        return Err(Error::InvalidArgument(alloc::format!(
            "cannot shrink ancilla from {} to {n_anc_new} levels",
            e.n_anc()
        )));
    }
    let mut u_d = CMatrix::zeros(n_anc_new, e.coupled.len());
    u_d.view_mut((0, 0), e.u_d.shape()).copy_from(&e.u_d);
    CanonicalEmbedding::from_parts(e.u_k.clone(), e.theta.clone(), e.coupled.clone(), u_d)
}

/// Norm action `‖H_opt‖·T` of the canonical generator, from its matrix.
pub fn generator_action(e: &CanonicalEmbedding, kind: NormKind) -> Result<f64> {
    let h = optimal_hamiltonian(e, 1.0)?;
    crate::numkernel::norm(&h.matrix, kind)
}

/// `exp(-i H_opt T)`.
pub fn generated_unitary(h: &HamiltonianOpt) -> Result<CMatrix> {
    exp_unitary(&h.matrix, h.duration)
}
