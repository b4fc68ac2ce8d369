//! Numerical tolerance bundle.

/// Named thresholds used by constructors and verification routines.
///
/// Every field is an absolute threshold unless its doc says otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative SVD/polar reconstruction error, scaled by `max(1, ‖A‖)`.
    pub reconstruction: f64,
    /// Entrywise `H - H†` deviation accepted as Hermitian.
    pub hermitian: f64,
    /// Entrywise `U†U - I` deviation accepted as unitary.
    pub unitary: f64,
    /// Singular values in `(1, 1 + clamp]` are snapped to 1.
    pub singular_clamp: f64,
    /// Minimum Gram eigenvalue for a linearly independent state set.
    pub lin_indep: f64,
    /// Norm deviation accepted for unit vectors.
    pub normalization: f64,
    /// Overlap magnitude accepted as orthogonal.
    pub orthogonality: f64,
    /// Most negative eigenvalue accepted as positive semidefinite.
    pub psd: f64,
    /// Probability sums and trace identities.
    pub probability: f64,
    /// Slack on norm-action lower bounds.
    pub action_bound: f64,
    /// Angles below this are treated as zero when cropping the ancilla.
    pub ancilla_theta: f64,
}

impl Tolerances {
    pub const DEFAULT: Self = Self {
        reconstruction: 1e-12,
        hermitian: 1e-12,
        unitary: 1e-10,
        singular_clamp: 1e-10,
        lin_indep: 1e-10,
        normalization: 1e-12,
        orthogonality: 1e-10,
        psd: 1e-10,
        probability: 1e-10,
        action_bound: 1e-9,
        ancilla_theta: 1e-9,
    };

    /// Multiplies every threshold by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            reconstruction: self.reconstruction * factor,
            hermitian: self.hermitian * factor,
            unitary: self.unitary * factor,
            singular_clamp: self.singular_clamp * factor,
            lin_indep: self.lin_indep * factor,
            normalization: self.normalization * factor,
            orthogonality: self.orthogonality * factor,
            psd: self.psd * factor,
            probability: self.probability * factor,
            action_bound: self.action_bound * factor,
            ancilla_theta: self.ancilla_theta * factor,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
