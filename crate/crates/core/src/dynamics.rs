//! Piecewise-constant Hamiltonian schedules, their norm action, and Monte
//! Carlo simulation of the discrimination protocol.

#[allow(unused_imports)]
use crate::Float;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{CanonicalEmbedding, HamiltonianOpt};
use crate::error::{Error, Result};
use crate::numkernel::{
    ensure_hermitian, ensure_unitary, exp_unitary, norm, singular_values, CMatrix, CVector,
    NormKind, C64,
};
use crate::tol::Tolerances;
use crate::usd::{validate_usd_block, LossyOperator, StateSet};

#[derive(Debug, Clone)]
pub struct Segment {
    pub generator: CMatrix,
    pub duration: f64,
}

/// Ordered list of constant generators applied for positive durations.
#[derive(Debug, Clone)]
pub struct HamiltonianSchedule {
    dim: usize,
    segments: Vec<Segment>,
}

impl HamiltonianSchedule {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            segments: Vec::new(),
        }
    }

    pub fn from_optimal(h: &HamiltonianOpt) -> Self {
        let mut s = Self::new(h.matrix.nrows());
        s.segments.push(Segment {
            generator: h.matrix.clone(),
            duration: h.duration,
        });
        s
    }

    pub fn push(&mut self, generator: CMatrix, duration: f64) -> Result<()> {
        if generator.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: generator.nrows(),
            });
        }
        ensure_hermitian(&generator, Tolerances::DEFAULT.hermitian)?;
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidArgument("segment duration must be positive".into()));
        }
        self.segments.push(Segment {
            generator,
            duration,
        });
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Product of segment propagators, latest segment leftmost.
    pub fn total_unitary(&self) -> Result<CMatrix> {
        let mut u = CMatrix::identity(self.dim, self.dim);
        for seg in &self.segments {
            u = exp_unitary(&seg.generator, seg.duration)? * u;
        }
        Ok(u)
    }
}

/// Applies the schedule to `psi0` in time order.
pub fn propagate(sched: &HamiltonianSchedule, psi0: &CVector) -> Result<CVector> {
    if psi0.len() != sched.dim {
        return Err(Error::DimensionMismatch {
            expected: sched.dim,
            found: psi0.len(),
        });
    }
    let norm0 = psi0.norm();
    if (norm0 - 1.0).abs() > Tolerances::DEFAULT.normalization {
        return Err(Error::NotNormalized {
            index: 0,
            norm: norm0,
        });
    }
    let mut psi = psi0.clone();
    for seg in &sched.segments {
        psi = exp_unitary(&seg.generator, seg.duration)? * psi;
    }
    Ok(psi)
}

/// `Σ_k ‖H_k‖ Δt_k`.
pub fn schedule_action(sched: &HamiltonianSchedule, kind: NormKind) -> Result<f64> {
    sched
        .segments
        .iter()
        .map(|s| Ok(norm(&s.generator, kind)? * s.duration))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport {
    pub action: f64,
    /// `arcsin √(1 - s_min²)` of the target operator.
    pub bound: f64,
    pub surplus: f64,
    pub holds: bool,
}

/// Checks that the schedule realizes `K` up to a left unitary and that its
/// spectral norm action is at least the minimal embedding cost.
pub fn verify_lower_bound(
    sched: &HamiltonianSchedule,
    k: &LossyOperator,
    sv_tol: f64,
) -> Result<LowerBoundReport> {
    let n = k.dim();
    if sched.dim < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sched.dim,
        });
    }
    let u = sched.total_unitary()?;
    let block = u.view((0, 0), (n, n)).into_owned();
    let realized = singular_values(&block)?;
    let deviation = realized
        .iter()
        .zip(k.singulars())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if deviation > sv_tol {
        return Err(Error::ScheduleMismatch { deviation });
    }
    let action = schedule_action(sched, NormKind::Spectral)?;
    let bound = crate::embedding::cost_report(k).spectral_action;
    let surplus = action - bound;
    Ok(LowerBoundReport {
        action,
        bound,
        surplus,
        holds: surplus >= -Tolerances::DEFAULT.action_bound,
    })
}

/// Random block-diagonal Hermitian generator with spectral norm `scale`.
fn block_diagonal_generator<R: Rng + ?Sized>(rng: &mut R, n_sys: usize, n_anc: usize, scale: f64) -> CMatrix {
    let hs = crate::sample::random_hermitian(rng, n_sys);
    let ha = crate::sample::random_hermitian(rng, n_anc);
    let g = crate::numkernel::block_diag(&hs, &ha);
    let current = crate::numkernel::spectral_norm(&g).unwrap_or(1.0).max(f64::MIN_POSITIVE);
    g * C64::from(scale / current)
}

/// Schedule of `n_segments` realizing the embedding's system block up to
/// block-diagonal factors: random block-diagonal detours, the optimal
/// generator split into consecutive pieces, then more detours.
pub fn detour_schedule<R: Rng + ?Sized>(
    e: &CanonicalEmbedding,
    rng: &mut R,
    n_segments: usize,
) -> Result<HamiltonianSchedule> {
    let n_segments = n_segments.max(1);
    let duration = 1.0;
    let h = crate::embedding::optimal_hamiltonian(e, duration)?;
    let pieces = rng.random_range(1..=n_segments.min(3));
    let detours = n_segments - pieces;
    let before = rng.random_range(0..=detours);
    let mut sched = HamiltonianSchedule::new(e.dim());
    let add_detour = |sched: &mut HamiltonianSchedule, rng: &mut R| -> Result<()> {
        let scale = rng.random_range(0.05..2.0);
        let g = block_diagonal_generator(rng, e.n_sys(), e.n_anc(), scale);
        sched.push(g, rng.random_range(0.1..1.0))
    };
    for _ in 0..before {
        add_detour(&mut sched, rng)?;
    }
    // Split T into `pieces` positive parts.
    let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.random_range(0.05..0.95)).collect();
    cuts.sort_by(f64::total_cmp);
    let mut last = 0.0;
    for c in cuts.into_iter().chain(core::iter::once(1.0)) {
        let dt = (c - last) * duration;
        if dt > 0.0 {
            sched.push(h.matrix.clone(), dt)?;
        }
        last = c;
    }
    for _ in before..detours {
        add_detour(&mut sched, rng)?;
    }
    Ok(sched)
}

/// `arccos |<ψ_in|ψ_out>|`, in `[0, π/2]`.
pub fn fubini_angle(psi_in: &CVector, psi_out: &CVector) -> Result<f64> {
    if psi_in.len() != psi_out.len() {
        return Err(Error::DimensionMismatch {
            expected: psi_in.len(),
            found: psi_out.len(),
        });
    }
    for (index, v) in [psi_in, psi_out].into_iter().enumerate() {
        let norm = v.norm();
        if (norm - 1.0).abs() > Tolerances::DEFAULT.normalization {
            return Err(Error::NotNormalized { index, norm });
        }
    }
    Ok(psi_in.dotc(psi_out).norm().min(1.0).acos())
}

/// Statistics of a simulated discrimination run.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub trials: u64,
    /// Clicks per conclusive outcome.
    pub conclusive: Vec<u64>,
    pub inconclusive: u64,
    /// Conclusive clicks naming the wrong state.
    pub errors: u64,
    pub seed: u64,
    /// Prior-averaged `1 - ‖K α_j‖²`.
    pub expected_inconclusive: f64,
}

impl MeasurementRecord {
    pub fn inconclusive_frequency(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.inconclusive as f64 / self.trials as f64
        }
    }

    /// Binomial standard deviation of the inconclusive frequency.
    pub fn inconclusive_sigma(&self) -> f64 {
        let p = self.expected_inconclusive.clamp(0.0, 1.0);
        (p * (1.0 - p) / self.trials.max(1) as f64).sqrt()
    }

    /// Deviation of the inconclusive frequency in units of sigma.
    pub fn inconclusive_z(&self) -> f64 {
        let dev = (self.inconclusive_frequency() - self.expected_inconclusive).abs();
        let sigma = self.inconclusive_sigma();
        if sigma > 0.0 {
            dev / sigma
        } else if dev <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Zero conclusive errors and inconclusive frequency within 4σ.
    pub fn passes(&self) -> bool {
        self.errors == 0 && self.inconclusive_z() <= 4.0
    }

    fn empty(n: usize, seed: u64, expected_inconclusive: f64) -> Self {
        Self {
            trials: 0,
            conclusive: alloc::vec![0; n],
            inconclusive: 0,
            errors: 0,
            seed,
            expected_inconclusive,
        }
    }

    /// Adds the counts of another partial record of the same run.
    pub fn merge(&mut self, other: &Self) {
        self.trials += other.trials;
        for (a, b) in self.conclusive.iter_mut().zip(&other.conclusive) {
            *a += b;
        }
        self.inconclusive += other.inconclusive;
        self.errors += other.errors;
    }
}

/// What to simulate: the canonical embedding of `𝒦`, a full unitary
/// whose upper-left `n_sys` block is the literal `K`, or any unitary whose
/// system block maps the states to orthogonal outputs (measured along
/// those outputs).
#[derive(Debug, Clone, Copy)]
pub enum Realization<'a> {
    Canonical(&'a CanonicalEmbedding),
    Exact { unitary: &'a CMatrix, n_sys: usize },
    Evolved { unitary: &'a CMatrix, n_sys: usize },
}

/// Per-trial outcome: `Some(i)` for a conclusive click on output `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trial {
    pub label: usize,
    pub outcome: Option<usize>,
}

/// Precomputed outcome distributions for every input label.
///
/// Trial `i` draws from its own ChaCha stream `(seed, i)`, so any
/// partition of the trial range gives identical merged records.
#[derive(Debug, Clone)]
pub struct DiscriminationPlan {
    n: usize,
    key: [u8; 32],
    seed: u64,
    prior_cdf: Vec<f64>,
    /// Per label: cumulative probabilities of conclusive outcomes
    /// `0..n`, the remainder is inconclusive.
    outcome_cdf: Vec<Vec<f64>>,
    expected_inconclusive: f64,
}

impl DiscriminationPlan {
    pub fn new(s: &StateSet, realization: Realization<'_>, seed: u64) -> Result<Self> {
        let n = s.dim();
        let (unitary, n_sys, basis) = match realization {
            Realization::Canonical(e) => {
                let kk = e.system_block();
                (e.w().clone(), e.n_sys(), conclusive_basis(&kk, s)?)
            }
            Realization::Exact { unitary, n_sys } => {
                ensure_unitary(unitary, Tolerances::DEFAULT.unitary)?;
                (unitary.clone(), n_sys, CMatrix::identity(n_sys, n_sys))
            }
            Realization::Evolved { unitary, n_sys } => {
                ensure_unitary(unitary, Tolerances::DEFAULT.unitary)?;
                if n_sys != n || unitary.nrows() < n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: n_sys,
                    });
                }
                let block = unitary.view((0, 0), (n, n)).into_owned();
                let basis = conclusive_basis(&block, s)?;
                (unitary.clone(), n_sys, basis)
            }
        };
        if n_sys != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: n_sys,
            });
        }
        let block = unitary.view((0, 0), (n, n)).into_owned();
        let check = validate_usd_block(&block, s, &Tolerances::DEFAULT)?;
        if let Some(v) = check.violations.first() {
            return Err(Error::NotUnambiguous {
                first: v.first,
                second: v.second,
                overlap: v.overlap,
            });
        }

        let total = unitary.nrows();
        let mut outcome_cdf = Vec::with_capacity(n);
        let mut expected_inconclusive = 0.0;
        for (alpha, &prior) in s.states().iter().zip(s.priors()) {
            let mut input = CVector::zeros(total);
            input.rows_mut(0, n).copy_from(alpha);
            let out = &unitary * input;
            let sys = out.rows(0, n);
            let mut acc = 0.0;
            let cdf: Vec<f64> = basis
                .column_iter()
                .map(|v| {
                    acc += v.dotc(&sys).norm_sqr();
                    acc
                })
                .collect();
            expected_inconclusive += prior * (1.0 - check_sum(&cdf));
            outcome_cdf.push(cdf);
        }
        let mut acc = 0.0;
        let prior_cdf = s
            .priors()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let mut key = [0u8; 32];
        ChaCha8Rng::seed_from_u64(seed).fill(&mut key);
        Ok(Self {
            n,
            key,
            seed,
            prior_cdf,
            outcome_cdf,
            expected_inconclusive,
        })
    }

    pub fn expected_inconclusive(&self) -> f64 {
        self.expected_inconclusive
    }

    pub fn trial(&self, index: u64) -> Trial {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        let u_label: f64 = rng.random();
        let u_out: f64 = rng.random();
        let label = self
            .prior_cdf
            .iter()
            .position(|&c| u_label < c)
            .unwrap_or(self.n - 1);
        let outcome = self.outcome_cdf[label].iter().position(|&c| u_out < c);
        Trial { label, outcome }
    }

    /// Runs the trials with indices in `range`.
    pub fn run(&self, range: Range<u64>) -> MeasurementRecord {
        let mut rec = MeasurementRecord::empty(self.n, self.seed, self.expected_inconclusive);
        for i in range {
            let t = self.trial(i);
            rec.trials += 1;
            match t.outcome {
                Some(o) => {
                    rec.conclusive[o] += 1;
                    if o != t.label {
                        rec.errors += 1;
                    }
                }
                None => rec.inconclusive += 1,
            }
        }
        rec
    }
}

fn check_sum(cdf: &[f64]) -> f64 {
    cdf.last().copied().unwrap_or(0.0).min(1.0)
}

/// Orthonormal basis whose column `i` is `𝒦α_i` normalized; columns for
/// states with no conclusive weight are filled by completion.
fn conclusive_basis(kk: &CMatrix, s: &StateSet) -> Result<CMatrix> {
    let n = s.dim();
    let mut cols: Vec<Option<CVector>> = s
        .states()
        .iter()
        .map(|a| {
            let v = kk * a;
            let nrm = v.norm();
            (nrm > 1e-12).then(|| v / C64::from(nrm))
        })
        .collect();
    let mut candidates = (0..n).map(|j| {
        let mut e = CVector::zeros(n);
        e[j] = C64::from(1.0);
        e
    });
    for i in 0..n {
        if cols[i].is_some() {
            continue;
        }
        loop {
            let Some(mut cand) = candidates.next() else {
                return Err(Error::InvalidArgument("cannot complete measurement basis".into()));
            };
            for v in cols.iter().flatten() {
                let proj = v.dotc(&cand);
                cand -= v * proj;
            }
            let nrm = cand.norm();
            if nrm > 1e-6 {
                cols[i] = Some(cand / C64::from(nrm));
                break;
            }
        }
    }
    let cols: Vec<CVector> = cols.into_iter().flatten().collect();
    Ok(CMatrix::from_columns(&cols))
}

/// Serial simulation of `trials` rounds.
pub fn simulate_discrimination(
    s: &StateSet,
    realization: Realization<'_>,
    trials: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    Ok(DiscriminationPlan::new(s, realization, seed)?.run(0..trials))
}
