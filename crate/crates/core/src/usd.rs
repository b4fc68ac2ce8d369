//! USD problem objects: the state set, its reciprocal basis, the lossy
//! operator `K` that maps the states onto orthogonal outputs, and the POVM
//! `{K†π_iK} ∪ {I - K†K}` it induces.

#[allow(unused_imports)]
use crate::Float;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numkernel::{
    ensure_finite, ensure_square, hermitian_eigen, max_abs, min_eigenvalue, svd, CMatrix,
    CVector, C64,
};
use crate::tol::Tolerances;

/// `N` normalized, linearly independent pure states in dimension `N`.
#[derive(Debug, Clone)]
pub struct StateSet {
    states: Vec<CVector>,
    priors: Vec<f64>,
}

impl StateSet {
    /// Builds a state set with uniform priors.
    pub fn new(states: Vec<CVector>) -> Result<Self> {
        let n = states.len();
        let priors = alloc::vec![1.0 / n.max(1) as f64; n];
        Self::with_priors(states, priors)
    }

    pub fn with_priors(states: Vec<CVector>, priors: Vec<f64>) -> Result<Self> {
        let tol = Tolerances::DEFAULT;
        let n = states.len();
        if n == 0 {
            return Err(Error::InvalidArgument("state set is empty".into()));
        }
        for (index, s) in states.iter().enumerate() {
            if s.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: s.len(),
                });
            }
            if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            let norm = s.norm();
            if (norm - 1.0).abs() > tol.normalization {
                return Err(Error::NotNormalized { index, norm });
            }
        }
        if priors.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: priors.len(),
            });
        }
        if priors.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument("priors must be non-negative".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > tol.probability {
            return Err(Error::InvalidArgument(format!(
                "priors sum to {total}, expected 1"
            )));
        }
        let set = Self { states, priors };
        set.check_independent(&tol)?;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// Matrix whose columns are the states.
    pub fn as_columns(&self) -> CMatrix {
        CMatrix::from_columns(&self.states)
    }

    /// `G_ij = <α_i|α_j>`.
    pub fn gram(&self) -> CMatrix {
        let a = self.as_columns();
        a.adjoint() * a
    }

    fn check_independent(&self, tol: &Tolerances) -> Result<()> {
        let min_eigenvalue = min_eigenvalue(&self.gram())?;
        if min_eigenvalue > tol.lin_indep {
            Ok(())
        } else {
            Err(Error::NotDiscriminable { min_eigenvalue })
        }
    }

    /// Magnitude of `<α_0|α_1>` for a two-state set.
    pub fn pair_overlap(&self) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        Ok(self.states[0].dotc(&self.states[1]).norm())
    }
}

/// Dual vectors `α̃_i` with `<α̃_i|α_j> = δ_ij`.
pub fn reciprocal_basis(s: &StateSet) -> Result<Vec<CVector>> {
    s.check_independent(&Tolerances::DEFAULT)?;
    // Columns of (A†)^{-1} = A G^{-1} are the duals.
    let a = s.as_columns();
    let inv = a
        .adjoint()
        .try_inverse()
        .ok_or(Error::NotDiscriminable { min_eigenvalue: 0.0 })?;
    Ok(inv.column_iter().map(|c| c.into_owned()).collect())
}

/// A contraction `K` on the system space, `‖K‖ ≤ 1`.
#[derive(Debug, Clone)]
pub struct LossyOperator {
    matrix: CMatrix,
    singulars: Vec<f64>,
}

impl LossyOperator {
    /// Validates passivity. Singular values within the clamp window of 1 (on
    /// either side) are snapped to exactly 1.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        ensure_finite(&matrix)?;
        ensure_square(&matrix)?;
        let mut singulars = svd(&matrix)?.singulars;
        let norm = singulars.first().copied().unwrap_or(0.0);
        if norm > 1.0 + tol.singular_clamp {
            return Err(Error::InfeasibleProbabilities { norm });
        }
        for s in &mut singulars {
            if (*s - 1.0).abs() <= tol.singular_clamp {
                *s = 1.0;
            }
        }
        Ok(Self { matrix, singulars })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Singular values, descending, in `[0, 1]`.
    pub fn singulars(&self) -> &[f64] {
        &self.singulars
    }

    pub fn s_max(&self) -> f64 {
        self.singulars.first().copied().unwrap_or(0.0)
    }

    pub fn s_min(&self) -> f64 {
        self.singulars.last().copied().unwrap_or(0.0)
    }

    pub fn is_marginal(&self, tol: f64) -> bool {
        (self.s_max() - 1.0).abs() <= tol
    }
}

/// Conclusive-branch operator `K = Σ_i √p_i |i><α̃_i|`, so `K|α_j> = √p_j |j>`.
pub fn build_lossy(s: &StateSet, probs: &[f64]) -> Result<LossyOperator> {
    let n = s.dim();
    if probs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: probs.len(),
        });
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument(
            "conclusive probabilities must lie in [0, 1]".into(),
        ));
    }
    let duals = reciprocal_basis(s)?;
    let mut k = CMatrix::zeros(n, n);
    for (i, (dual, &p)) in duals.iter().zip(probs).enumerate() {
        k.set_row(i, &(dual.adjoint() * C64::from(p.sqrt())));
    }
    LossyOperator::new(k)
}

/// Largest equal conclusive probability the states admit: `λ_min(G)`.
///
/// For two states of overlap `c` this is the symmetric optimum `1 - c`.
pub fn max_uniform_probability(s: &StateSet) -> Result<f64> {
    min_eigenvalue(&s.gram()).map(|v| v.clamp(0.0, 1.0))
}

/// `[1 - c, 1 - c]` for a two-state set of overlap magnitude `c`.
pub fn symmetric_two_state_probs(s: &StateSet) -> Result<Vec<f64>> {
    let c = s.pair_overlap()?;
    Ok(alloc::vec![1.0 - c, 1.0 - c])
}

/// Rescales `K` so its largest singular value is exactly 1.
pub fn scale_marginal(k: &LossyOperator) -> Result<LossyOperator> {
    let norm = svd(k.matrix())?.max();
    if norm <= 0.0 {
        return Err(Error::ZeroOperator);
    }
    LossyOperator::new(k.matrix() / C64::from(norm))
}

/// Conclusive elements `F_1..F_N` and the inconclusive element `F_{N+1}`.
#[derive(Debug, Clone)]
pub struct PovmSet {
    pub conclusive: Vec<CMatrix>,
    pub inconclusive: CMatrix,
}

impl PovmSet {
    pub fn dim(&self) -> usize {
        self.inconclusive.nrows()
    }

    pub fn elements(&self) -> impl Iterator<Item = &CMatrix> {
        self.conclusive.iter().chain(core::iter::once(&self.inconclusive))
    }

    /// Checks positivity, completeness and rank one conclusive elements.
    pub fn check(&self, tol: &Tolerances) -> Result<()> {
        let n = self.dim();
        let mut sum = CMatrix::zeros(n, n);
        for (idx, f) in self.elements().enumerate() {
            let (vals, _) = hermitian_eigen(f)?;
            let lowest = vals.first().copied().unwrap_or(0.0);
            if lowest < -tol.psd {
                return Err(Error::PassivityViolation {
                    min_eigenvalue: lowest,
                });
            }
            if idx < self.conclusive.len() && n >= 2 && vals[n - 2] > tol.psd {
                return Err(Error::InvalidArgument(format!(
                    "conclusive element {idx} is not rank one"
                )));
            }
            sum += f;
        }
        let deviation = max_abs(&(sum - CMatrix::identity(n, n)));
        if deviation > tol.probability {
            return Err(Error::RelationMismatch {
                what: "POVM completeness deviation",
                expected: 0.0,
                found: deviation,
            });
        }
        Ok(())
    }
}

/// `F_i = K†π_iK` with `π_i` the projector on output level `i`, and
/// `F_{N+1} = I - K†K`.
pub fn povm_from_lossy(k: &LossyOperator) -> Result<PovmSet> {
    let n = k.dim();
    povm_with_outputs(k, &CMatrix::identity(n, n))
}

/// Same as [`povm_from_lossy`] with `π_i` projecting on column `i` of the
/// unitary `outputs` instead of the standard basis.
pub fn povm_with_outputs(k: &LossyOperator, outputs: &CMatrix) -> Result<PovmSet> {
    let n = k.dim();
    if outputs.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: outputs.nrows(),
        });
    }
    let rows = outputs.adjoint() * k.matrix();
    let conclusive: Vec<CMatrix> = rows
        .row_iter()
        .map(|r| {
            let f = r.adjoint() * r;
            (&f + f.adjoint()) * C64::from(0.5)
        })
        .collect();
    let ktk = k.matrix().adjoint() * k.matrix();
    let inconclusive = CMatrix::identity(n, n) - (&ktk + ktk.adjoint()) * C64::from(0.5);
    let min_eigenvalue = min_eigenvalue(&inconclusive)?;
    if min_eigenvalue < -Tolerances::DEFAULT.psd {
        return Err(Error::PassivityViolation { min_eigenvalue });
    }
    Ok(PovmSet {
        conclusive,
        inconclusive,
    })
}

/// Checks Hermiticity, unit trace and positivity of a density matrix.
pub fn validate_density(rho: &CMatrix, tol: &Tolerances) -> Result<()> {
    ensure_finite(rho)?;
    ensure_square(rho)?;
    if crate::numkernel::hermiticity_defect(rho) > tol.probability {
        return Err(Error::InvalidDensityMatrix("not Hermitian"));
    }
    if (rho.trace().re - 1.0).abs() > tol.probability || rho.trace().im.abs() > tol.probability {
        return Err(Error::InvalidDensityMatrix("trace is not 1"));
    }
    if min_eigenvalue(rho)? < -tol.psd {
        return Err(Error::InvalidDensityMatrix("not positive semidefinite"));
    }
    Ok(())
}

/// Pure-state density matrix `|ψ><ψ|`.
pub fn pure_density(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

/// `p_i = tr(ρF_i)` for every element, inconclusive last.
pub fn outcome_probabilities(rho: &CMatrix, p: &PovmSet) -> Result<Vec<f64>> {
    let tol = Tolerances::DEFAULT;
    validate_density(rho, &tol)?;
    if rho.nrows() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: rho.nrows(),
        });
    }
    let probs: Vec<f64> = p
        .elements()
        .map(|f| (rho * f).trace().re)
        .collect();
    Ok(probs)
}

/// `√((1 - c)/(1 + c))`: the smaller singular value of the marginal lossy
/// operator that discriminates two states of overlap magnitude `c`.
pub fn two_state_smin(overlap: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::InvalidArgument(format!(
            "overlap {overlap} outside [0, 1]"
        )));
    }
    Ok(((1.0 - overlap) / (1.0 + overlap)).sqrt())
}

/// Returns the angle `φ = arccos|<α_-|α_+>|` after checking
/// `tan(φ/2) = s_min/s_max` for the given operator.
pub fn two_state_angle_check(k: &LossyOperator, s: &StateSet) -> Result<f64> {
    if s.dim() != 2 || k.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: s.dim().max(k.dim()),
        });
    }
    let phi = s.pair_overlap()?.min(1.0).acos();
    let expected = (phi / 2.0).tan();
    let found = k.s_min() / k.s_max();
    if (expected - found).abs() > 1e-10 {
        return Err(Error::RelationMismatch {
            what: "tan(phi/2) vs s_min/s_max",
            expected,
            found,
        });
    }
    Ok(phi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairViolation {
    pub first: usize,
    pub second: usize,
    /// `|<Kα_i|Kα_j>|`.
    pub overlap: f64,
}

/// Outcome of checking that `K` maps the states to mutually orthogonal
/// outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct UsdValidation {
    /// `‖Kα_i‖²` per state.
    pub conclusive_probabilities: Vec<f64>,
    pub violations: Vec<PairViolation>,
}

impl UsdValidation {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_usd(k: &LossyOperator, s: &StateSet) -> Result<UsdValidation> {
    validate_usd_block(k.matrix(), s, &Tolerances::DEFAULT)
}

/// [`validate_usd`] for any system block, passive or not.
pub fn validate_usd_block(k: &CMatrix, s: &StateSet, tol: &Tolerances) -> Result<UsdValidation> {
    if k.nrows() != s.dim() || k.ncols() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: k.nrows(),
        });
    }
    let outputs: Vec<CVector> = s.states().iter().map(|a| k * a).collect();
    let conclusive_probabilities = outputs.iter().map(|o| o.norm_squared()).collect();
    let mut violations = Vec::new();
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            let overlap = outputs[i].dotc(&outputs[j]).norm();
            if overlap > tol.orthogonality {
                violations.push(PairViolation {
                    first: i,
                    second: j,
                    overlap,
                });
            }
        }
    }
    Ok(UsdValidation {
        conclusive_probabilities,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::singular_values;
    use crate::sample::{haar_unitary, random_density_matrix, random_states};
    use crate::testutil::rng;
    use alloc::vec;
    use proptest::prelude::*;

    fn cv(vals: &[f64]) -> CVector {
        CVector::from_iterator(vals.len(), vals.iter().map(|&v| C64::from(v)))
    }

    /// α_0 = (1, 0), α_1 = (c, √(1 - c²)).
    pub(crate) fn pair(c: f64) -> StateSet {
        StateSet::new(vec![cv(&[1.0, 0.0]), cv(&[c, (1.0 - c * c).sqrt()])]).unwrap()
    }

    fn real_diag(vals: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&cv(vals))
    }

    #[test]
    fn orthonormal_basis_is_self_dual() {
        let s = StateSet::new(vec![cv(&[1.0, 0.0, 0.0]), cv(&[0.0, 1.0, 0.0]), cv(&[0.0, 0.0, 1.0])])
            .unwrap();
        let d = reciprocal_basis(&s).unwrap();
        for (a, b) in d.iter().zip(s.states()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn reciprocal_basis_at_forty_five_degrees() {
        let t = core::f64::consts::FRAC_PI_4;
        let s = StateSet::new(vec![cv(&[1.0, 0.0]), cv(&[t.cos(), t.sin()])]).unwrap();
        let d = reciprocal_basis(&s).unwrap();
        // Solving <d_i|α_j> = δ_ij by hand: d_0 = (1, -1), d_1 = (0, √2).
        assert!((&d[0] - cv(&[1.0, -1.0])).norm() < 1e-12);
        assert!((&d[1] - cv(&[0.0, 2f64.sqrt()])).norm() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let ip = d[i].dotc(&s.states()[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C64::from(expected)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn nearly_parallel_states_are_rejected() {
        let c: f64 = 1.0 - 1e-14;
        let err = StateSet::new(vec![cv(&[1.0, 0.0]), cv(&[c, (1.0 - c * c).sqrt()])]).unwrap_err();
        assert!(matches!(err, Error::NotDiscriminable { .. }));
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let err = StateSet::new(vec![cv(&[1.0, 0.0]), cv(&[0.0, 1.1])]).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { index: 1, .. }));
    }

    #[test]
    fn orthonormal_states_full_probability_give_unit_norm() {
        let s = StateSet::new(vec![cv(&[0.0, 1.0]), cv(&[1.0, 0.0])]).unwrap();
        let k = build_lossy(&s, &[1.0, 1.0]).unwrap();
        assert!((k.s_max() - 1.0).abs() < 1e-15);
        assert!((k.s_min() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_state_lossy_operator_singulars() {
        let s = pair(0.6);
        let k = build_lossy(&s, &[0.4, 0.4]).unwrap();
        // Numerically recomputed rather than read from the cache.
        let sv = singular_values(k.matrix()).unwrap();
        assert!((sv[0] - 1.0).abs() < 1e-12);
        assert!((sv[1] - 0.5).abs() < 1e-12);
        assert!((sv[1] - two_state_smin(0.6).unwrap()).abs() < 1e-12);
        for (j, a) in s.states().iter().enumerate() {
            let out = k.matrix() * a;
            for i in 0..2 {
                let expected = if i == j { 0.4f64.sqrt() } else { 0.0 };
                assert!((out[i].norm() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn excessive_probabilities_are_infeasible() {
        let s = pair(0.6);
        let err = build_lossy(&s, &[0.9, 0.9]).unwrap_err();
        assert!(matches!(err, Error::InfeasibleProbabilities { .. }));
        // Independent witness: I - K†K built by hand has a negative eigenvalue.
        let d = reciprocal_basis(&s).unwrap();
        let mut ktk = CMatrix::zeros(2, 2);
        for v in &d {
            ktk += v * v.adjoint() * C64::from(0.9);
        }
        let f = CMatrix::identity(2, 2) - ktk;
        assert!(min_eigenvalue(&f).unwrap() < -1e-3);
    }

    #[test]
    fn scale_marginal_examples() {
        let k = LossyOperator::new(real_diag(&[0.8, 0.4])).unwrap();
        let m = scale_marginal(&k).unwrap();
        assert_eq!(m.singulars(), &[1.0, 0.5]);
        let again = scale_marginal(&m).unwrap();
        assert!(max_abs(&(again.matrix() - m.matrix())) < 1e-15);
        let mut r = rng(11);
        let k = LossyOperator::new(crate::sample::random_passive(&mut r, 4, false)).unwrap();
        let m = scale_marginal(&k).unwrap();
        assert!((singular_values(m.matrix()).unwrap()[0] - 1.0).abs() < 1e-14);
        assert_eq!(
            scale_marginal(&LossyOperator::new(CMatrix::zeros(2, 2)).unwrap()).unwrap_err(),
            Error::ZeroOperator
        );
    }

    #[test]
    fn povm_examples() {
        let p = povm_from_lossy(&LossyOperator::new(CMatrix::identity(2, 2)).unwrap()).unwrap();
        assert!(max_abs(&(&p.conclusive[0] - real_diag(&[1.0, 0.0]))) < 1e-15);
        assert!(max_abs(&(&p.conclusive[1] - real_diag(&[0.0, 1.0]))) < 1e-15);
        assert!(max_abs(&p.inconclusive) < 1e-15);

        let p = povm_from_lossy(&LossyOperator::new(real_diag(&[1.0, 0.5])).unwrap()).unwrap();
        assert!(max_abs(&(&p.inconclusive - real_diag(&[0.0, 0.75]))) < 1e-15);
        p.check(&Tolerances::DEFAULT).unwrap();
    }

    #[test]
    fn two_state_povm_is_unambiguous() {
        let s = pair(0.6);
        let k = build_lossy(&s, &[0.4, 0.4]).unwrap();
        let p = povm_from_lossy(&k).unwrap();
        p.check(&Tolerances::DEFAULT).unwrap();
        let rho_plus = pure_density(&s.states()[0]);
        // Direct traces, no helper.
        let t1 = (&rho_plus * &p.conclusive[0]).trace();
        let t2 = (&rho_plus * &p.conclusive[1]).trace();
        assert!((t1.re - 0.4).abs() < 1e-10 && t1.im.abs() < 1e-10);
        assert!(t2.norm() < 1e-10);
    }

    #[test]
    fn outcome_probability_examples() {
        let p = povm_from_lossy(&LossyOperator::new(CMatrix::identity(2, 2)).unwrap()).unwrap();
        let probs = outcome_probabilities(&real_diag(&[0.0, 1.0]), &p).unwrap();
        assert_eq!(probs, vec![0.0, 1.0, 0.0]);

        let p = povm_from_lossy(&LossyOperator::new(real_diag(&[1.0, 0.5])).unwrap()).unwrap();
        let probs = outcome_probabilities(&real_diag(&[0.5, 0.5]), &p).unwrap();
        assert!((probs[2] - 0.375).abs() < 1e-15);

        let bad = real_diag(&[0.7, 0.7]);
        assert!(matches!(
            outcome_probabilities(&bad, &p),
            Err(Error::InvalidDensityMatrix(_))
        ));
    }

    #[test]
    fn two_state_smin_examples() {
        assert_eq!(two_state_smin(0.0).unwrap(), 1.0);
        assert_eq!(two_state_smin(1.0).unwrap(), 0.0);
        assert!((two_state_smin(0.6).unwrap() - 0.5).abs() < 1e-15);
        assert!(two_state_smin(1.2).is_err());
        assert!(two_state_smin(-0.1).is_err());
    }

    #[test]
    fn two_state_angle_examples() {
        let s = pair(0.0);
        let k = LossyOperator::new(CMatrix::identity(2, 2)).unwrap();
        let phi = two_state_angle_check(&k, &s).unwrap();
        assert!((phi - core::f64::consts::FRAC_PI_2).abs() < 1e-15);

        let s = pair(0.6);
        let k = build_lossy(&s, &symmetric_two_state_probs(&s).unwrap()).unwrap();
        let phi = two_state_angle_check(&k, &s).unwrap();
        assert!((phi - 0.6f64.acos()).abs() < 1e-15);
        // Half-angle identity: tan(φ/2) = sin φ / (1 + cos φ) = 0.8 / 1.6.
        assert!(((phi / 2.0).tan() - 0.5).abs() < 1e-12);

        let wrong = LossyOperator::new(real_diag(&[1.0, 0.7])).unwrap();
        assert!(matches!(
            two_state_angle_check(&wrong, &s),
            Err(Error::RelationMismatch { .. })
        ));
    }

    #[test]
    fn validate_usd_examples() {
        let s = pair(0.6);
        let k = build_lossy(&s, &[0.4, 0.4]).unwrap();
        let v = validate_usd(&k, &s).unwrap();
        assert!(v.passed());
        assert!((v.conclusive_probabilities[0] - 0.4).abs() < 1e-12);

        let id = LossyOperator::new(CMatrix::identity(2, 2)).unwrap();
        let v = validate_usd(&id, &s).unwrap();
        assert_eq!(v.violations.len(), 1);
        assert_eq!((v.violations[0].first, v.violations[0].second), (0, 1));

        let mut r = rng(12);
        let noise = crate::sample::gaussian_matrix(&mut r, 2, 2) * C64::from(1e-3);
        let perturbed = k.matrix() * C64::from(0.99) + noise;
        let v = validate_usd_block(&perturbed, &s, &Tolerances::DEFAULT).unwrap();
        let out0 = &perturbed * &s.states()[0];
        let out1 = &perturbed * &s.states()[1];
        assert!(out0.dotc(&out1).norm() > 1e-10);
        assert!(!v.passed());
    }

    #[test]
    fn max_uniform_probability_matches_symmetric_optimum() {
        let s = pair(0.6);
        assert!((max_uniform_probability(&s).unwrap() - 0.4).abs() < 1e-12);
    }

    fn random_usd(seed: u64, n: usize) -> (StateSet, LossyOperator, Vec<f64>) {
        let mut r = rng(seed);
        let s = StateSet::new(random_states(&mut r, n)).unwrap();
        let pmax = max_uniform_probability(&s).unwrap();
        let probs: Vec<f64> = (0..n)
            .map(|i| pmax * (0.5 + 0.5 * ((i as f64 + 1.0) / n as f64)))
            .collect();
        let k = build_lossy(&s, &probs).unwrap();
        (s, k, probs)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn unambiguity_and_completeness(seed in any::<u64>(), n in 2usize..6) {
            let (s, k, probs) = random_usd(seed, n);
            let p = povm_from_lossy(&k).unwrap();
            p.check(&Tolerances::DEFAULT).unwrap();
            for (j, a) in s.states().iter().enumerate() {
                let rho = pure_density(a);
                for (i, f) in p.conclusive.iter().enumerate() {
                    let t = (&rho * f).trace().re;
                    let expected = if i == j { probs[i] } else { 0.0 };
                    prop_assert!((t - expected).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn passivity_iff_psd_inconclusive(seed in any::<u64>(), n in 1usize..6, scale in 0.5f64..1.5) {
            let mut r = rng(seed);
            let k = crate::sample::random_passive(&mut r, n, true) * C64::from(scale);
            let norm = singular_values(&k).unwrap()[0];
            let f = CMatrix::identity(n, n) - k.adjoint() * &k;
            let psd = min_eigenvalue(&f).unwrap() >= -1e-10;
            prop_assert_eq!(psd, norm <= 1.0 + 1e-10);
            prop_assert_eq!(LossyOperator::new(k).is_ok(), psd);
        }

        #[test]
        fn two_state_consistency(c in 0.01f64..0.99) {
            let s = pair(c);
            let k = build_lossy(&s, &[1.0 - c, 1.0 - c]).unwrap();
            let sv = singular_values(k.matrix()).unwrap();
            prop_assert!((sv[0] - 1.0).abs() < 1e-10);
            prop_assert!((sv[1] - two_state_smin(c).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn left_unitary_invariance(seed in any::<u64>(), n in 2usize..5) {
            let (_, k, _) = random_usd(seed, n);
            let mut r = rng(seed ^ 0xabcd);
            let u = haar_unitary(&mut r, n);
            let rotated = LossyOperator::new(&u * k.matrix()).unwrap();
            let p = povm_from_lossy(&k).unwrap();
            let q = povm_with_outputs(&rotated, &u).unwrap();
            for (a, b) in p.elements().zip(q.elements()) {
                prop_assert!(max_abs(&(a - b)) < 1e-12);
            }
            for (a, b) in k.singulars().iter().zip(rotated.singulars()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn outcome_probabilities_complete(seed in any::<u64>(), n in 2usize..5) {
            let (_, k, _) = random_usd(seed, n);
            let mut r = rng(seed.wrapping_add(7));
            let rho = random_density_matrix(&mut r, n);
            let probs = outcome_probabilities(&rho, &povm_from_lossy(&k).unwrap()).unwrap();
            prop_assert!(probs.iter().all(|&p| p >= -1e-12));
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}
