//! Two-state discrimination in a laser-driven three-level atom.
//!
//! Levels 1 and 2 are the system, level 3 the ancilla. Both system levels
//! are dipole coupled to level 3 by a two-tone field
//! `ε(t) = a₁cos(ω₁t + φ₁) + a₂cos(ω₂t + φ₂)` with `ω_i = E₃ - E_i`.
//! Under the rotating wave approximation the coupling reduces to
//! `H_RWA = [[0,0,A₁],[0,0,A₂],[A₁*,A₂*,0]]`.
//!
//! Phase convention: with the lab state `ψ = exp(-i diag(E) t) ψ_RWA`, the
//! resonant coupling is `A_i = (d_i/2) a_i e^{+iφ_i}`.

#[allow(unused_imports)]
use crate::Float;
use alloc::vec::Vec;

use nalgebra::Matrix3;

use crate::dynamics::HamiltonianSchedule;
use crate::error::{Error, Result};
use crate::numkernel::{exp_unitary, CMatrix, CVector, C64, IM};

/// Desk-scale atom: `E = (0, 1, 10)`, `d = (1, 1)`.
pub const DEFAULT_LEVELS: [f64; 3] = [0.0, 1.0, 10.0];
pub const DEFAULT_MAX_AMPLITUDE: f64 = 0.01;

const MIN_STEPS: usize = 64;
const MAX_STEPS: usize = 1 << 24;
const CONVERGENCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomConfig {
    levels: [f64; 3],
    dipoles: [C64; 2],
}

impl AtomConfig {
    pub fn new(levels: [f64; 3], dipoles: [C64; 2]) -> Result<Self> {
        if levels.iter().any(|e| !e.is_finite()) || dipoles.iter().any(|d| !d.re.is_finite() || !d.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let omega1 = levels[2] - levels[0];
        let omega2 = levels[2] - levels[1];
        if omega1 <= 0.0 || omega2 <= 0.0 || (omega1 - omega2).abs() <= 1e-6 * omega1.max(omega2) {
            return Err(Error::InvalidTransitions { omega1, omega2 });
        }
        if dipoles.iter().any(|d| d.norm() == 0.0) {
            return Err(Error::InvalidArgument("dipole coefficients must be nonzero".into()));
        }
        Ok(Self { levels, dipoles })
    }

    pub fn levels(&self) -> [f64; 3] {
        self.levels
    }

    pub fn dipoles(&self) -> [C64; 2] {
        self.dipoles
    }

    /// `(E₃ - E₁, E₃ - E₂)`.
    pub fn transition_frequencies(&self) -> (f64, f64) {
        (self.levels[2] - self.levels[0], self.levels[2] - self.levels[1])
    }
}

impl Default for AtomConfig {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS,
            dipoles: [C64::from(1.0); 2],
        }
    }
}

/// Lab-frame field parameters for one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParameters {
    pub amplitudes: [f64; 2],
    pub phases: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseDesign {
    /// `(A₁, A₂)`.
    pub coupling: [C64; 2],
    pub duration: f64,
    pub overlap: f64,
    pub s_min: f64,
    /// The two input states the design discriminates.
    pub states: [CVector; 2],
}

impl PulseDesign {
    /// `√(|A₁|² + |A₂|²)`.
    pub fn coupling_norm(&self) -> f64 {
        self.coupling[0].norm().hypot(self.coupling[1].norm())
    }

    /// `a_i = 2|A_i|/|d_i|`, `φ_i = arg(A_i/d_i)`.
    pub fn field_parameters(&self, atom: &AtomConfig) -> FieldParameters {
        let mut amplitudes = [0.0; 2];
        let mut phases = [0.0; 2];
        for i in 0..2 {
            let a = self.coupling[i];
            let d = atom.dipoles[i];
            if a.norm() > 0.0 {
                amplitudes[i] = 2.0 * a.norm() / d.norm();
                phases[i] = (a / d).arg();
            }
        }
        FieldParameters { amplitudes, phases }
    }
}

/// `arcsin√(2c/(1+c))`, the pulse area demanded by overlap `c`.
pub fn pulse_area(c: f64) -> f64 {
    (2.0 * c).sqrt().atan2((1.0 - c).sqrt())
}

/// Duration at which a design for overlap `c` has coupling norm `max_amplitude`.
pub fn duration_for(c: f64, max_amplitude: f64) -> f64 {
    pulse_area(c) / max_amplitude
}

/// Real states `(cos x, ±sin x)` with `cos 2x = c`.
pub fn symmetric_pair(c: f64) -> [CVector; 2] {
    let a = ((1.0 + c) / 2.0).sqrt();
    let b = ((1.0 - c) / 2.0).sqrt();
    [
        CVector::from_vec(alloc::vec![C64::from(a), C64::from(b)]),
        CVector::from_vec(alloc::vec![C64::from(a), C64::from(-b)]),
    ]
}

pub fn design_pulse(alpha_plus: &CVector, alpha_minus: &CVector, t: f64) -> Result<PulseDesign> {
    for (i, a) in [alpha_plus, alpha_minus].into_iter().enumerate() {
        if a.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: a.len() });
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = a.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { index: i, norm });
        }
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument("duration must be positive".into()));
    }
    let inner = alpha_plus.dotc(alpha_minus);
    let c = inner.norm().min(1.0);
    if c <= 1e-12 || c >= 1.0 - 1e-12 {
        return Err(Error::DegenerateDesign { overlap: c });
    }
    // Rephase α₋ so that <α₊|α₋> = c.
    let rotated = alpha_minus * (inner.conj() / C64::from(c));
    let sum = alpha_plus + rotated;
    let mut dir = &sum / C64::from(sum.norm());
    let pivot = if dir[0].norm() > 1e-14 { dir[0] } else { dir[1] };
    dir *= pivot.conj() / C64::from(pivot.norm());

    let scale = pulse_area(c) / t;
    Ok(PulseDesign {
        coupling: [dir[0] * scale, dir[1] * scale],
        duration: t,
        overlap: c,
        s_min: ((1.0 - c) / (1.0 + c)).sqrt(),
        states: [alpha_plus.clone(), alpha_minus.clone()],
    })
}

pub fn rwa_hamiltonian(p: &PulseDesign) -> CMatrix {
    let [a1, a2] = p.coupling;
    let z = C64::from(0.0);
    CMatrix::from_row_slice(3, 3, &[z, z, a1, z, z, a2, a1.conj(), a2.conj(), z])
}

/// `exp(-i H_RWA T)`.
pub fn designed_unitary(p: &PulseDesign) -> Result<CMatrix> {
    exp_unitary(&rwa_hamiltonian(p), p.duration)
}

/// `exp(-i diag(E) t)`.
pub fn free_rotation(atom: &AtomConfig, t: f64) -> CMatrix {
    let mut r = CMatrix::zeros(3, 3);
    for (i, e) in atom.levels.iter().enumerate() {
        r[(i, i)] = (-IM * (e * t)).exp();
    }
    r
}

/// Lab-frame prediction of the design: `exp(-i diag(E) T) exp(-i H_RWA T)`.
pub fn lab_unitary(atom: &AtomConfig, p: &PulseDesign) -> Result<CMatrix> {
    Ok(free_rotation(atom, p.duration) * designed_unitary(p)?)
}

fn field(t: f64, atom: &AtomConfig, f: &FieldParameters) -> f64 {
    let (w1, w2) = atom.transition_frequencies();
    f.amplitudes[0] * (w1 * t + f.phases[0]).cos() + f.amplitudes[1] * (w2 * t + f.phases[1]).cos()
}

pub fn full_hamiltonian_at(t: f64, atom: &AtomConfig, p: &PulseDesign) -> CMatrix {
    let eps = field(t, atom, &p.field_parameters(atom));
    let [d1, d2] = atom.dipoles;
    let [e1, e2, e3] = atom.levels;
    let z = C64::from(0.0);
    CMatrix::from_row_slice(
        3,
        3,
        &[
            C64::from(e1),
            z,
            d1 * eps,
            z,
            C64::from(e2),
            d2 * eps,
            d1.conj() * eps,
            d2.conj() * eps,
            C64::from(e3),
        ],
    )
}

/// Lab-frame piecewise-constant discretization of `H₀(t)` sampled at
/// segment midpoints.
pub fn lab_schedule(atom: &AtomConfig, p: &PulseDesign, n_steps: usize) -> Result<HamiltonianSchedule> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be positive".into()));
    }
    let dt = p.duration / n_steps as f64;
    let mut sched = HamiltonianSchedule::new(3);
    for k in 0..n_steps {
        sched.push(full_hamiltonian_at((k as f64 + 0.5) * dt, atom, p), dt)?;
    }
    Ok(sched)
}

type M3 = Matrix3<C64>;

/// `H₀` in the interaction picture of `diag(E)`.
fn interaction_hamiltonian(t: f64, atom: &AtomConfig, f: &FieldParameters) -> M3 {
    let eps = field(t, atom, f);
    let (w1, w2) = atom.transition_frequencies();
    let h13 = atom.dipoles[0] * eps * (-IM * (w1 * t)).exp();
    let h23 = atom.dipoles[1] * eps * (-IM * (w2 * t)).exp();
    let z = C64::from(0.0);
    M3::new(z, z, h13, z, z, h23, h13.conj(), h23.conj(), z)
}

fn expm3(a: &M3) -> M3 {
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let mut squarings = 0;
    let mut scaled = *a;
    let mut n = norm;
    while n > 0.125 {
        scaled /= C64::from(2.0);
        n /= 2.0;
        squarings += 1;
    }
    let mut term = M3::identity();
    let mut sum = M3::identity();
    for k in 1..=10 {
        term = term * scaled / C64::from(k as f64);
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Interaction-picture propagator over `[0, T]` with `n_steps` fourth
/// order Magnus steps (two Gauss–Legendre nodes per step).
fn interaction_propagator(atom: &AtomConfig, p: &PulseDesign, n_steps: usize) -> M3 {
    let f = p.field_parameters(atom);
    let h = p.duration / n_steps as f64;
    let off = 3f64.sqrt() / 6.0;
    let comm_coef = C64::from(3f64.sqrt() / 12.0 * h * h);
    let mut u = M3::identity();
    for k in 0..n_steps {
        let t0 = k as f64 * h;
        let h1 = interaction_hamiltonian(t0 + (0.5 - off) * h, atom, &f);
        let h2 = interaction_hamiltonian(t0 + (0.5 + off) * h, atom, &f);
        let omega = -(h1 + h2) * (IM * (h / 2.0)) - (h2 * h1 - h1 * h2) * comm_coef;
        u = expm3(&omega) * u;
    }
    u
}

/// Lab-frame propagator of the full `H₀(t)` over `[0, T]`.
pub fn full_propagator(atom: &AtomConfig, p: &PulseDesign, n_steps: usize) -> CMatrix {
    let u = interaction_propagator(atom, p, n_steps.max(1));
    free_rotation(atom, p.duration) * CMatrix::from_iterator(3, 3, u.iter().copied())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwaFidelity {
    /// Minimum of `per_state`.
    pub fidelity: f64,
    pub per_state: [f64; 2],
    pub n_steps: usize,
    /// Fidelity change over the last step doubling.
    pub last_change: f64,
}

fn fidelities(atom: &AtomConfig, p: &PulseDesign, predicted: &CMatrix, n_steps: usize) -> [f64; 2] {
    let full = full_propagator(atom, p, n_steps);
    let mut out = [0.0; 2];
    for (o, alpha) in out.iter_mut().zip(&p.states) {
        let psi0 = CVector::from_vec(alloc::vec![alpha[0], alpha[1], C64::from(0.0)]);
        *o = (&full * &psi0).dotc(&(predicted * &psi0)).norm();
    }
    out
}

/// Overlap between the full time-dependent evolution and the RWA design
/// in the lab frame, minimized over the two input states.
///
/// `n_steps` is raised so that each step spans at most a quarter period of
/// the fastest interaction-picture oscillation, then doubled until the
/// fidelity moves by less than `1e-6`.
pub fn rwa_fidelity(atom: &AtomConfig, p: &PulseDesign, n_steps: usize) -> Result<RwaFidelity> {
    let predicted = lab_unitary(atom, p)?;
    let (w1, w2) = atom.transition_frequencies();
    let fastest = 2.0 * w1.max(w2);
    let floor = (p.duration * fastest / (core::f64::consts::FRAC_PI_2)).ceil() as usize;
    let mut n = n_steps.max(floor).max(MIN_STEPS);
    let mut prev = fidelities(atom, p, &predicted, n);
    loop {
        if n > MAX_STEPS / 2 {
            return Err(Error::NonConvergent { suggested_steps: 2 * n });
        }
        n *= 2;
        let next = fidelities(atom, p, &predicted, n);
        let change = (next[0] - prev[0]).abs().max((next[1] - prev[1]).abs());
        if change < CONVERGENCE {
            return Ok(RwaFidelity {
                fidelity: next[0].min(next[1]),
                per_state: next,
                n_steps: n,
                last_change: change,
            });
        }
        prev = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffReport {
    pub overlap: f64,
    /// `T√(|A₁|² + |A₂|²)`.
    pub lhs: f64,
    /// `arcsin√(2c/(1+c))`.
    pub rhs: f64,
    pub passed: bool,
}

pub fn tradeoff_check(p: &PulseDesign, c: f64) -> TradeoffReport {
    let lhs = p.duration * p.coupling_norm();
    let rhs = (2.0 * c / (1.0 + c)).sqrt().asin();
    TradeoffReport {
        overlap: c,
        lhs,
        rhs,
        passed: (lhs - rhs).abs() <= 1e-10,
    }
}

/// Design, tradeoff and RWA check for one overlap of the symmetric pair at
/// the given amplitude cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub tradeoff: TradeoffReport,
    pub fidelity: RwaFidelity,
}

pub fn sweep_point(atom: &AtomConfig, c: f64, max_amplitude: f64) -> Result<SweepPoint> {
    let [a, b] = symmetric_pair(c);
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::DegenerateDesign { overlap: c });
    }
    let p = design_pulse(&a, &b, duration_for(c, max_amplitude))?;
    Ok(SweepPoint {
        tradeoff: tradeoff_check(&p, c),
        fidelity: rwa_fidelity(atom, &p, MIN_STEPS)?,
    })
}

/// Final system-level states `(ψ₊, ψ₋)` of `u` applied to the design inputs.
pub fn system_outputs(u: &CMatrix, p: &PulseDesign) -> Vec<CVector> {
    p.states
        .iter()
        .map(|a| {
            let psi0 = CVector::from_vec(alloc::vec![a[0], a[1], C64::from(0.0)]);
            (u * psi0).rows(0, 2).into_owned()
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{propagate, schedule_action, simulate_discrimination, Realization};
    use crate::embedding::{canonical_embedding, cost_report};
    use crate::numkernel::{hermiticity_defect, max_abs, spectral_norm, NormKind};
    use crate::sample::random_state;
    use crate::testutil::rng;
    use crate::usd::{validate_usd_block, LossyOperator, StateSet};
    use crate::Tolerances;
    use core::f64::consts::PI;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pair_with_overlap<R: Rng>(r: &mut R, target: f64) -> [CVector; 2] {
        let a = random_state(r, 2);
        let mut perp = random_state(r, 2);
        let proj = a.dotc(&perp);
        perp -= &a * proj;
        perp /= C64::from(perp.norm());
        let phase = C64::from_polar(1.0, r.random_range(0.0..2.0 * PI));
        let b = (&a * C64::from(target) + &perp * C64::from((1.0 - target * target).sqrt())) * phase;
        [a, b]
    }

    #[test]
    fn atom_config_invariants() {
        let d = [C64::from(1.0); 2];
        assert!(AtomConfig::new([0.0, 1.0, 10.0], d).is_ok());
        assert!(matches!(
            AtomConfig::new([0.0, 0.0, 10.0], d),
            Err(Error::InvalidTransitions { .. })
        ));
        assert!(matches!(
            AtomConfig::new([0.0, 1e-8, 10.0], d),
            Err(Error::InvalidTransitions { .. })
        ));
        assert!(AtomConfig::new([0.0, 11.0, 10.0], d).is_err());
        assert!(AtomConfig::new([0.0, 1.0, 10.0], [C64::from(0.0), C64::from(1.0)]).is_err());
        assert!(AtomConfig::new([f64::NAN, 1.0, 10.0], d).is_err());
        assert_eq!(AtomConfig::default().transition_frequencies(), (10.0, 9.0));
    }

    #[test]
    fn symmetric_design() {
        let [a, b] = symmetric_pair(0.6);
        assert!((a.dotc(&b).re - 0.6).abs() < 1e-15);
        let p = design_pulse(&a, &b, 2.0).unwrap();
        assert!(p.coupling[1].norm() < 1e-15);
        assert!(p.coupling[0].im == 0.0 && p.coupling[0].re > 0.0);
        assert!((p.s_min - 0.5).abs() < 1e-15);
        assert!((p.duration * p.coupling_norm() - PI / 3.0).abs() < 1e-14);

        let u = designed_unitary(&p).unwrap();
        let s = StateSet::new(alloc::vec![a, b]).unwrap();
        let block = u.view((0, 0), (2, 2)).into_owned();
        assert!(validate_usd_block(&block, &s, &Tolerances::DEFAULT).unwrap().passed());
    }

    #[test]
    fn degenerate_designs() {
        let e0 = CVector::from_vec(alloc::vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let e1 = CVector::from_vec(alloc::vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(design_pulse(&e0, &e1, 1.0), Err(Error::DegenerateDesign { .. })));
        let phased = &e0 * C64::from_polar(1.0, 0.7);
        assert!(matches!(design_pulse(&e0, &phased, 1.0), Err(Error::DegenerateDesign { .. })));
        assert!(design_pulse(&e0, &(&e0 * c(2.0, 0.0)), 1.0).is_err());
        let [a, b] = symmetric_pair(0.3);
        assert!(design_pulse(&a, &b, 0.0).is_err());
        assert!(sweep_point(&AtomConfig::default(), 1.0, 0.01).is_err());
    }

    #[test]
    fn small_overlap_small_area() {
        let [a, b] = symmetric_pair(1e-8);
        let p = design_pulse(&a, &b, 1.0).unwrap();
        assert!(p.coupling_norm() < 2e-4);
        assert_eq!(pulse_area(0.0), 0.0);
    }

    #[test]
    fn tradeoff_examples() {
        for (cc, expected) in [(0.6, PI / 3.0), (0.2, (0.4f64 / 1.2).sqrt().asin())] {
            let [a, b] = symmetric_pair(cc);
            let p = design_pulse(&a, &b, 7.0).unwrap();
            let rep = tradeoff_check(&p, cc);
            assert!(rep.passed);
            assert!((rep.rhs - expected).abs() < 1e-15 && (rep.lhs - expected).abs() < 1e-12);
        }
        let [a, b] = symmetric_pair(0.6);
        let mut p = design_pulse(&a, &b, 7.0).unwrap();
        let rep = tradeoff_check(&p, 0.0);
        assert!(!rep.passed && rep.rhs == 0.0);
        p.duration *= 0.9;
        assert!(!tradeoff_check(&p, 0.6).passed);
    }

    #[test]
    fn rwa_hamiltonian_examples() {
        let [a, b] = symmetric_pair(0.5);
        let mut p = design_pulse(&a, &b, 1.0).unwrap();
        p.coupling = [c(1.0, 0.0), c(0.0, 0.0)];
        let h = rwa_hamiltonian(&p);
        assert!((spectral_norm(&h).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(h[(1, 2)], c(0.0, 0.0));
        p.coupling = [c(3.0, 0.0), c(0.0, 4.0)];
        assert!((spectral_norm(&rwa_hamiltonian(&p)).unwrap() - 5.0).abs() < 1e-13);
    }

    #[test]
    fn designed_unitary_matches_canonical_blocks() {
        let mut r = rng(50);
        let [a, b] = pair_with_overlap(&mut r, 0.45);
        let p = design_pulse(&a, &b, 3.0).unwrap();
        let u = designed_unitary(&p).unwrap();
        let k = LossyOperator::new(u.view((0, 0), (2, 2)).into_owned()).unwrap();
        let e = canonical_embedding(&k).unwrap();
        // System block is positive already, so it equals 𝒦.
        assert!(max_abs(&(e.system_block() - k.matrix())) < 1e-12);
        assert!((k.s_min() - p.s_min).abs() < 1e-12);
        assert_eq!(e.theta().iter().filter(|t| **t > 1e-9).count(), 1);
    }

    #[test]
    fn field_parameters_round_trip() {
        let atom = AtomConfig::new([0.0, 2.0, 7.0], [c(0.5, 0.5), c(-1.0, 0.2)]).unwrap();
        let mut r = rng(51);
        let [a, b] = pair_with_overlap(&mut r, 0.3);
        let p = design_pulse(&a, &b, 10.0).unwrap();
        let f = p.field_parameters(&atom);
        for i in 0..2 {
            let back = atom.dipoles()[i] / 2.0 * f.amplitudes[i] * C64::from_polar(1.0, f.phases[i]);
            assert!((back - p.coupling[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn full_hamiltonian_examples() {
        let atom = AtomConfig::default();
        let [a, b] = symmetric_pair(0.4);
        let mut p = design_pulse(&a, &b, 5.0).unwrap();
        let real_coupling = p.coupling;
        p.coupling = [c(0.0, 0.0); 2];
        let h = full_hamiltonian_at(1.3, &atom, &p);
        let mut diag = CMatrix::zeros(3, 3);
        for i in 0..3 {
            diag[(i, i)] = C64::from(DEFAULT_LEVELS[i]);
        }
        assert_eq!(h, diag);

        p.coupling = [c(0.02, 0.0), c(0.03, 0.0)];
        let h0 = full_hamiltonian_at(0.0, &atom, &p);
        // a_i = 2A_i for unit dipoles, φ = 0.
        assert!((h0[(0, 2)] - c(0.1, 0.0)).norm() < 1e-15);
        assert!((h0[(2, 1)] - c(0.1, 0.0)).norm() < 1e-15);

        p.coupling = real_coupling;
        let mut r = rng(52);
        for _ in 0..20 {
            let t = r.random_range(0.0..100.0);
            assert!(hermiticity_defect(&full_hamiltonian_at(t, &atom, &p)) < 1e-14);
        }
    }

    #[test]
    fn magnus_agrees_with_lab_discretization() {
        let atom = AtomConfig::new([0.0, 1.0, 4.0], [c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let [a, b] = symmetric_pair(0.3);
        let p = design_pulse(&a, &b, 4.0).unwrap();
        let sched = lab_schedule(&atom, &p, 8000).unwrap();
        let u = full_propagator(&atom, &p, 2000);
        for alpha in &p.states {
            let psi0 = CVector::from_vec(alloc::vec![alpha[0], alpha[1], C64::from(0.0)]);
            let lab = propagate(&sched, &psi0).unwrap();
            assert!((lab - &u * &psi0).norm() < 1e-4);
        }
    }

    #[test]
    fn vanishing_amplitude_fidelity_one() {
        let atom = AtomConfig::default();
        let [a, b] = symmetric_pair(0.5);
        let p = design_pulse(&a, &b, duration_for(0.5, 1e-5)).unwrap();
        let f = rwa_fidelity(&atom, &p, 0).unwrap();
        assert!(f.fidelity > 1.0 - 1e-7);
    }

    #[test]
    fn default_atom_fidelity() {
        let atom = AtomConfig::default();
        let mut r = rng(53);
        let [a, b] = pair_with_overlap(&mut r, 0.6);
        let p = design_pulse(&a, &b, duration_for(0.6, DEFAULT_MAX_AMPLITUDE)).unwrap();
        let f = rwa_fidelity(&atom, &p, 0).unwrap();
        assert!(f.fidelity >= 0.999, "{f:?}");
        assert!(f.last_change < 1e-6);
    }

    #[test]
    fn stronger_drive_degrades_fidelity() {
        let atom = AtomConfig::default();
        let [a, b] = symmetric_pair(0.6);
        let weak = design_pulse(&a, &b, duration_for(0.6, 0.01)).unwrap();
        let strong = design_pulse(&a, &b, duration_for(0.6, 0.3)).unwrap();
        let fw = rwa_fidelity(&atom, &weak, 0).unwrap().fidelity;
        let fs = rwa_fidelity(&atom, &strong, 0).unwrap().fidelity;
        assert!(fs < fw);
        assert!(fs < 0.999);
    }

    #[test]
    fn area_monotone() {
        let mut prev = pulse_area(0.0);
        for i in 1..=100 {
            let cc = i as f64 / 101.0;
            let a = pulse_area(cc);
            assert!(a > prev);
            prev = a;
        }
        assert!(prev < PI / 2.0);
        assert!((pulse_area(1.0) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn generic_pair_discriminates() {
        let atom = AtomConfig::default();
        let mut r = rng(54);
        let [a, b] = pair_with_overlap(&mut r, 0.7);
        let p = design_pulse(&a, &b, 50.0).unwrap();
        let u = lab_unitary(&atom, &p).unwrap();
        let s = StateSet::new(alloc::vec![a, b]).unwrap();
        let rec = simulate_discrimination(&s, Realization::Evolved { unitary: &u, n_sys: 2 }, 10_000, 7).unwrap();
        assert_eq!(rec.errors, 0);
        assert!(rec.passes());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn design_validity(seed in any::<u64>(), cc in 0.05f64..0.95, t in 0.5f64..200.0) {
            let mut r = rng(seed);
            let [a, b] = pair_with_overlap(&mut r, cc);
            let p = design_pulse(&a, &b, t).unwrap();
            prop_assert!(tradeoff_check(&p, cc).passed);
            let u = designed_unitary(&p).unwrap();
            let s = StateSet::new(alloc::vec![a, b]).unwrap();
            let rec = simulate_discrimination(&s, Realization::Evolved { unitary: &u, n_sys: 2 }, 10_000, seed).unwrap();
            prop_assert_eq!(rec.errors, 0);
        }

        #[test]
        fn consistent_with_embedding_cost(seed in any::<u64>(), cc in 0.05f64..0.95, t in 0.5f64..50.0) {
            let mut r = rng(seed);
            let [a, b] = pair_with_overlap(&mut r, cc);
            let p = design_pulse(&a, &b, t).unwrap();
            let mut sched = HamiltonianSchedule::new(3);
            sched.push(rwa_hamiltonian(&p), p.duration).unwrap();
            let action = schedule_action(&sched, NormKind::Spectral).unwrap();
            let u = designed_unitary(&p).unwrap();
            let k = LossyOperator::new(u.view((0, 0), (2, 2)).into_owned()).unwrap();
            prop_assert!((action - cost_report(&k).spectral_action).abs() < 1e-10);
        }

        #[test]
        fn rotating_frame_covariance(seed in any::<u64>(), cc in 0.05f64..0.95, t in 0.5f64..50.0) {
            let mut r = rng(seed);
            let [a, b] = pair_with_overlap(&mut r, cc);
            let p = design_pulse(&a, &b, t).unwrap();
            let atom = AtomConfig::new([0.0, r.random_range(0.1..3.0), r.random_range(4.0..20.0)], [C64::from(1.0); 2]).unwrap();
            let rwa = system_outputs(&designed_unitary(&p).unwrap(), &p);
            let lab = system_outputs(&lab_unitary(&atom, &p).unwrap(), &p);
            prop_assert!((rwa[0].dotc(&rwa[1]).norm() - lab[0].dotc(&lab[1]).norm()).abs() < 1e-12);
            prop_assert!(lab[0].dotc(&lab[1]).norm() < 1e-10);
            let rot = free_rotation(&atom, t);
            prop_assert!(rot[(0, 2)].norm() == 0.0 && rot[(1, 2)].norm() == 0.0);
        }
    }
}
