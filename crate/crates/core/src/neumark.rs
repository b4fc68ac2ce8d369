//! Neumark dilation equivalent to an embedding unitary, and the cost of
//! concentrating conclusive results back onto the system levels.
//!
//! With the ancilla prepared in its first level, the input `ρ` is embedded
//! as `ρ ⊕ 0`. The dilated projectors `Π_k = U†|k><k|U` then reproduce the
//! embedding statistics: levels below `n_sys` carry the conclusive POVM
//! elements and the ancilla levels together carry `F_{N+1}`.

#[allow(unused_imports)]
use crate::Float;
use alloc::vec::Vec;

use rand::Rng;

use crate::embedding::{canonical_embedding, cost_report, unitary_action};
use crate::error::{Error, Result};
use crate::numkernel::{ensure_unitary, max_abs, polar, CMatrix, NormKind};
use crate::tol::Tolerances;
use crate::usd::{outcome_probabilities, povm_with_outputs, validate_density, LossyOperator};

#[derive(Debug, Clone)]
pub struct DilationSet {
    /// One rank-one projector per dilated level; system levels first.
    pub projectors: Vec<CMatrix>,
    pub n_sys: usize,
}

impl DilationSet {
    pub fn dim(&self) -> usize {
        self.projectors.len()
    }

    pub fn n_anc(&self) -> usize {
        self.dim() - self.n_sys
    }

    /// Idempotence, Hermiticity, mutual orthogonality and completeness.
    /// Returns the worst deviation found.
    pub fn algebra_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        let mut sum = CMatrix::zeros(d, d);
        for (j, p) in self.projectors.iter().enumerate() {
            worst = worst.max(max_abs(&(p * p - p)));
            worst = worst.max(crate::numkernel::hermiticity_defect(p));
            for q in &self.projectors[j + 1..] {
                worst = worst.max(max_abs(&(p * q)));
            }
            sum += p;
        }
        worst.max(max_abs(&(sum - CMatrix::identity(d, d))))
    }

    pub fn check(&self, tol: &Tolerances) -> Result<()> {
        let defect = self.algebra_defect();
        if defect > tol.probability {
            return Err(Error::RelationMismatch {
                what: "dilated projector algebra defect",
                expected: 0.0,
                found: defect,
            });
        }
        Ok(())
    }
}

/// `Π_k = U†|k><k|U` for every level of the dilated space.
pub fn dilation_projectors(u: &CMatrix, n_sys: usize) -> Result<DilationSet> {
    ensure_unitary(u, Tolerances::DEFAULT.unitary)?;
    if n_sys > u.nrows() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            found: n_sys,
        });
    }
    let projectors = u
        .row_iter()
        .map(|row| row.adjoint() * row)
        .collect();
    Ok(DilationSet { projectors, n_sys })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationProbabilities {
    /// `tr((ρ ⊕ 0) Π_k)` per dilated level.
    pub levels: Vec<f64>,
    pub n_sys: usize,
}

impl DilationProbabilities {
    pub fn conclusive(&self) -> &[f64] {
        &self.levels[..self.n_sys]
    }

    pub fn ancilla(&self) -> &[f64] {
        &self.levels[self.n_sys..]
    }

    pub fn inconclusive(&self) -> f64 {
        self.ancilla().iter().sum()
    }
}

pub fn dilation_probabilities(rho_sys: &CMatrix, d: &DilationSet) -> Result<DilationProbabilities> {
    validate_density(rho_sys, &Tolerances::DEFAULT)?;
    let n = d.n_sys;
    if rho_sys.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho_sys.nrows(),
        });
    }
    let mut rho = CMatrix::zeros(d.dim(), d.dim());
    rho.view_mut((0, 0), (n, n)).copy_from(rho_sys);
    let levels = d
        .projectors
        .iter()
        .map(|p| (&rho * p).trace().re)
        .collect();
    Ok(DilationProbabilities { levels, n_sys: n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub samples: usize,
    pub max_conclusive_deviation: f64,
    pub max_inconclusive_deviation: f64,
    pub passed: bool,
}

/// Compares dilation statistics of `u` with the POVM of `k` on random
/// density matrices.
///
/// The conclusive POVM elements are taken with output projectors matched to
/// `u`'s system block `Q K`, that is `F_i = K†Q†|i><i|QK`; the inconclusive
/// element is `I - K†K` from `k` alone.
pub fn equivalence_check<R: Rng + ?Sized>(
    k: &LossyOperator,
    u: &CMatrix,
    samples: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<EquivalenceReport> {
    let n = k.dim();
    let d = dilation_projectors(u, n)?;
    let block = u.view((0, 0), (n, n)).into_owned();
    let deviation = max_abs(&(block.adjoint() * &block - k.matrix().adjoint() * k.matrix()));
    if deviation > tol.unitary {
        return Err(Error::EmbeddingMismatch { deviation });
    }
    let outputs = polar(k.matrix())?.unitary_factor * polar(&block)?.unitary_factor.adjoint();
    let povm = povm_with_outputs(k, &outputs)?;

    let mut worst_conclusive: f64 = 0.0;
    let mut worst_inconclusive: f64 = 0.0;
    for _ in 0..samples {
        let rho = crate::sample::random_density_matrix(rng, n);
        let dil = dilation_probabilities(&rho, &d)?;
        let direct = outcome_probabilities(&rho, &povm)?;
        for (a, b) in dil.conclusive().iter().zip(&direct[..n]) {
            worst_conclusive = worst_conclusive.max((a - b).abs());
        }
        worst_inconclusive = worst_inconclusive.max((dil.inconclusive() - direct[n]).abs());
    }
    Ok(EquivalenceReport {
        samples,
        max_conclusive_deviation: worst_conclusive,
        max_inconclusive_deviation: worst_inconclusive,
        passed: worst_conclusive <= tol.probability && worst_inconclusive <= tol.probability,
    })
}

/// Least spectral norm action of a unitary that concentrates the conclusive
/// Neumark outcomes of `u` onto the system levels.
///
/// This is the action of the canonical representative (positive diagonal
/// blocks) of `u`'s system block, checked against the closed-form
/// embedding cost.
pub fn concentration_cost(u: &CMatrix, n_sys: usize) -> Result<f64> {
    ensure_unitary(u, Tolerances::DEFAULT.unitary)?;
    if n_sys > u.nrows() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            found: n_sys,
        });
    }
    let k = LossyOperator::new(u.view((0, 0), (n_sys, n_sys)).into_owned())?;
    let e = canonical_embedding(&k)?;
    let cost = unitary_action(e.w(), NormKind::Spectral)?;
    let expected = cost_report(&k).spectral_action;
    if (cost - expected).abs() > 1e-10 {
        return Err(Error::RelationMismatch {
            what: "concentration cost vs embedding cost",
            expected,
            found: cost,
        });
    }
    Ok(cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{canonical_embedding, exact_embedding};
    use crate::numkernel::{hermitian_eigen, C64};
    use crate::sample::{haar_unitary, random_states};
    use crate::testutil::rng;
    use crate::usd::{build_lossy, max_uniform_probability, pure_density, StateSet};
    use crate::CVector;
    use alloc::vec;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn pair(c: f64) -> StateSet {
        StateSet::new(vec![
            CVector::from_vec(vec![C64::from(1.0), C64::from(0.0)]),
            CVector::from_vec(vec![C64::from(c), C64::from((1.0 - c * c).sqrt())]),
        ])
        .unwrap()
    }

    #[test]
    fn identity_gives_standard_projectors() {
        let d = dilation_projectors(&CMatrix::identity(4, 4), 2).unwrap();
        for (k, p) in d.projectors.iter().enumerate() {
            let mut e = CMatrix::zeros(4, 4);
            e[(k, k)] = C64::from(1.0);
            assert!(max_abs(&(p - e)) == 0.0);
        }
    }

    #[test]
    fn two_state_projectors_are_complete_rank_one() {
        let k = build_lossy(&pair(0.6), &[0.4, 0.4]).unwrap();
        let e = canonical_embedding(&k).unwrap();
        let d = dilation_projectors(e.w(), 2).unwrap();
        assert_eq!(d.dim(), 4);
        let sum: CMatrix = d.projectors.iter().fold(CMatrix::zeros(4, 4), |a, p| a + p);
        assert!(max_abs(&(sum - CMatrix::identity(4, 4))) < 1e-12);
        for p in &d.projectors {
            let (vals, _) = hermitian_eigen(p).unwrap();
            assert!((vals[3] - 1.0).abs() < 1e-12);
            assert!(vals[..3].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn dilation_probability_examples() {
        let d = dilation_projectors(&CMatrix::identity(4, 4), 2).unwrap();
        let rho = CMatrix::identity(2, 2) * C64::from(0.5);
        let p = dilation_probabilities(&rho, &d).unwrap();
        assert_eq!(p.levels, vec![0.5, 0.5, 0.0, 0.0]);

        let s = pair(0.6);
        let k = build_lossy(&s, &[0.4, 0.3]).unwrap();
        let u = exact_embedding(&k).unwrap();
        let d = dilation_projectors(&u, 2).unwrap();
        for (j, expected) in [(0usize, 0.4), (1, 0.3)] {
            let p = dilation_probabilities(&pure_density(&s.states()[j]), &d).unwrap();
            assert!((p.conclusive()[j] - expected).abs() < 1e-12);
            assert!(p.conclusive()[1 - j].abs() < 1e-12);
            assert!((p.inconclusive() - (1.0 - expected)).abs() < 1e-12);
            assert!((p.levels.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        let bad = CMatrix::identity(2, 2);
        assert!(dilation_probabilities(&bad, &d).is_err());
    }

    #[test]
    fn equivalence_examples() {
        let mut r = rng(40);
        let k = build_lossy(&pair(0.6), &[0.4, 0.4]).unwrap();
        let u = exact_embedding(&k).unwrap();
        let rep = equivalence_check(&k, &u, 50, &mut r, &Tolerances::DEFAULT).unwrap();
        assert!(rep.passed);
        assert!(rep.max_conclusive_deviation < 1e-12 && rep.max_inconclusive_deviation < 1e-12);

        // Canonical W realizes the same POVM with rotated outputs.
        let w = canonical_embedding(&k).unwrap().w().clone();
        assert!(equivalence_check(&k, &w, 20, &mut r, &Tolerances::DEFAULT).unwrap().passed);

        let s = StateSet::new(random_states(&mut r, 3)).unwrap();
        let pmax = max_uniform_probability(&s).unwrap();
        let k3 = build_lossy(&s, &[pmax, 0.8 * pmax, 0.5 * pmax]).unwrap();
        let u3 = exact_embedding(&k3).unwrap();
        assert!(equivalence_check(&k3, &u3, 50, &mut r, &Tolerances::DEFAULT).unwrap().passed);

        let corrupt = crate::numkernel::block_diag(&CMatrix::identity(2, 2), &haar_unitary(&mut r, 2))
            * crate::numkernel::exp_unitary(&crate::sample::random_hermitian(&mut r, 4), 0.3).unwrap()
            * &u;
        assert!(matches!(
            equivalence_check(&k, &corrupt, 10, &mut r, &Tolerances::DEFAULT),
            Err(Error::EmbeddingMismatch { .. })
        ));
        let mut not_unitary = u.clone();
        not_unitary[(0, 0)] += C64::from(0.1);
        assert!(matches!(
            equivalence_check(&k, &not_unitary, 10, &mut r, &Tolerances::DEFAULT),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn concentration_cost_examples() {
        let mut r = rng(41);
        let k = LossyOperator::new(haar_unitary(&mut r, 3)).unwrap();
        let u = exact_embedding(&k).unwrap();
        assert!(concentration_cost(&u, 3).unwrap() < 1e-7);

        let k = build_lossy(&pair(0.6), &[0.4, 0.4]).unwrap();
        let u = exact_embedding(&k).unwrap();
        assert!((concentration_cost(&u, 2).unwrap() - PI / 3.0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn projector_algebra(seed in any::<u64>(), dim in 2usize..13) {
            let mut r = rng(seed);
            let u = haar_unitary(&mut r, dim);
            let d = dilation_projectors(&u, dim / 2).unwrap();
            prop_assert!(d.algebra_defect() < 1e-10);
        }

        #[test]
        fn concentration_matches_embedding_cost(seed in any::<u64>(), n in 1usize..6) {
            let mut r = rng(seed);
            let k = LossyOperator::new(crate::sample::random_passive(&mut r, n, false)).unwrap();
            let u = exact_embedding(&k).unwrap();
            let c = concentration_cost(&u, n).unwrap();
            prop_assert!((c - cost_report(&k).spectral_action).abs() < 1e-10);
        }
    }
}
