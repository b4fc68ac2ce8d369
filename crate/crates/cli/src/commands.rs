//! The four subcommands as library functions returning reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use usd_embed_core::atomlaser::{
    design_pulse, duration_for, lab_unitary, rwa_fidelity, symmetric_pair, tradeoff_check,
};
use usd_embed_core::dynamics::{
    detour_schedule, verify_lower_bound, DiscriminationPlan, HamiltonianSchedule, Realization,
};
use usd_embed_core::embedding::{
    canonical_embedding, cost_report, extend_ancilla, generator_action, optimal_hamiltonian,
    perturbed_embedding, reduce_ancilla, unitary_action, CanonicalEmbedding, CostReport,
};
use usd_embed_core::neumark::{concentration_cost, equivalence_check};
use usd_embed_core::numkernel::{block_diag, max_abs, polar};
use usd_embed_core::sample::haar_unitary;
use usd_embed_core::usd::{
    build_lossy, max_uniform_probability, povm_from_lossy, validate_usd_block, LossyOperator, StateSet,
};
use usd_embed_core::{CMatrix, NormKind, Tolerances};

use crate::error::CliError;
use crate::parallel::simulate_parallel;
use crate::problem::{from_complex, from_vector, ProblemFile, SweepRange};
use crate::report::{
    AncillaDims, AtomEcho, AtomRow, Check, CostRow, Costs, InputEcho, MeasurementStats, ReportFile,
};

pub const DEFAULT_SEED: u64 = 0x05D1;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SAMPLES: usize = 200;
/// Overlap of the built-in two-state instance.
pub const DEFAULT_OVERLAP: f64 = 0.6;
const FIDELITY_TARGET: f64 = 0.999;

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub seed: u64,
    pub tol: Tolerances,
    pub tol_scale: f64,
}

impl Settings {
    pub fn new(seed: u64, tol_scale: f64) -> Self {
        Self {
            seed,
            tol: Tolerances::DEFAULT.scaled(tol_scale),
            tol_scale,
        }
    }
}

impl Default for Settings {
    fn default() -> Self {
        Self::new(DEFAULT_SEED, 1.0)
    }
}

/// Instance inputs shared by discriminate, cost and verify.
#[derive(Debug, Clone, Default)]
pub struct Instance {
    pub problem: Option<ProblemFile>,
    pub probs: Option<Vec<f64>>,
    pub priors: Option<Vec<f64>>,
}

struct Built {
    states: StateSet,
    probs: Vec<f64>,
    k: LossyOperator,
}

impl Instance {
    fn build(&self) -> Result<Built, CliError> {
        let problem = self
            .problem
            .clone()
            .unwrap_or_else(|| ProblemFile::symmetric_pair(DEFAULT_OVERLAP));
        let states = problem.state_set(self.priors.as_deref())?;
        let probs = match self.probs.clone().or_else(|| problem.probs.clone()) {
            Some(p) => {
                if p.len() != states.dim() {
                    return Err(CliError::Validation(format!(
                        "probs: expected {} values, found {}",
                        states.dim(),
                        p.len()
                    )));
                }
                p
            }
            None => vec![max_uniform_probability(&states)?; states.dim()],
        };
        let k = build_lossy(&states, &probs).map_err(|e| CliError::from_core("probs", e))?;
        Ok(Built {
            states,
            probs,
            k,
        })
    }
}

impl Built {
    fn echo(&self) -> InputEcho {
        InputEcho {
            dim: self.states.dim(),
            states: self.states.states().iter().map(from_vector).collect(),
            probs: self.probs.clone(),
            priors: self.states.priors().to_vec(),
        }
    }
}

pub fn norm_name(kind: NormKind) -> &'static str {
    match kind {
        NormKind::Spectral => "spectral",
        NormKind::HilbertSchmidt => "hs",
    }
}

fn costs(c: &CostReport, kind: NormKind) -> Costs {
    Costs {
        spectral: c.spectral_action,
        hilbert_schmidt: c.hs_action,
        norm: norm_name(kind).into(),
        selected: c.action(kind),
        max_transfer_fraction: c.max_transfer_fraction,
    }
}

fn ancilla_dims(e: &CanonicalEmbedding, tol: &Tolerances) -> Result<AncillaDims, CliError> {
    Ok(AncillaDims {
        canonical: e.n_anc(),
        reduced: reduce_ancilla(e, tol.ancilla_theta)?.n_anc(),
    })
}

fn measurement_stats(rec: &usd_embed_core::dynamics::MeasurementRecord) -> MeasurementStats {
    let z = rec.inconclusive_z();
    MeasurementStats {
        trials: rec.trials,
        conclusive: rec.conclusive.clone(),
        inconclusive: rec.inconclusive,
        errors: rec.errors,
        inconclusive_frequency: rec.inconclusive_frequency(),
        expected_inconclusive: rec.expected_inconclusive,
        sigma: rec.inconclusive_sigma(),
        z: z.is_finite().then_some(z),
    }
}

/// Builds `K`, its canonical embedding and `H_opt`, then simulates the
/// measurement.
pub fn cmd_discriminate(inst: &Instance, trials: u64, s: &Settings) -> Result<ReportFile, CliError> {
    let b = inst.build()?;
    let mut r = ReportFile::new("discriminate", s.seed, s.tol_scale);
    r.inputs = Some(b.echo());
    let cost = cost_report(&b.k);
    r.singular_values = cost.singulars.clone();
    r.costs = Some(costs(&cost, NormKind::Spectral));
    let e = canonical_embedding(&b.k)?;
    r.ancilla = Some(ancilla_dims(&e, &s.tol)?);

    let usd = validate_usd_block(b.k.matrix(), &b.states, &s.tol)?;
    r.push_check(Check::new(
        "usd_unambiguous",
        usd.passed(),
        format!("{} non-orthogonal output pairs", usd.violations.len()),
    ));
    let inv = e.check_invariants(&s.tol);
    r.push_check(Check::new(
        "embedding_invariants",
        inv.is_ok(),
        inv.err().map(|e| e.to_string()).unwrap_or_else(|| "ok".into()),
    ));
    let h = optimal_hamiltonian(&e, 1.0)?;
    let h_action = generator_action(&e, NormKind::Spectral)?;
    let dev = (h_action * h.duration - cost.spectral_action).abs();
    r.push_check(Check::new(
        "hamiltonian_action",
        dev <= s.tol.action_bound,
        format!("|‖H_opt‖T - cost| = {dev:.3e}"),
    ));

    let plan = DiscriminationPlan::new(&b.states, Realization::Canonical(&e), s.seed)?;
    let rec = simulate_parallel(&plan, trials);
    r.push_check(Check::new(
        "zero_conclusive_errors",
        rec.errors == 0,
        format!("{} errors in {} trials", rec.errors, rec.trials),
    ));
    r.push_check(Check::new(
        "inconclusive_rate",
        rec.inconclusive_z() <= 4.0,
        format!(
            "frequency {:.6} vs expected {:.6} (z = {:.2})",
            rec.inconclusive_frequency(),
            rec.expected_inconclusive,
            rec.inconclusive_z()
        ),
    ));
    r.measurement = Some(measurement_stats(&rec));
    Ok(r)
}

/// Closed-form costs, or the symmetric two-state cost curve when `sweep`
/// is given.
pub fn cmd_cost(
    inst: &Instance,
    kind: NormKind,
    sweep: Option<SweepRange>,
    s: &Settings,
) -> Result<ReportFile, CliError> {
    let mut r = ReportFile::new("cost", s.seed, s.tol_scale);
    if let Some(range) = sweep {
        for c in range.points() {
            if !(0.0..1.0).contains(&c) {
                return Err(CliError::Infeasible(format!(
                    "sweep: overlap {c} leaves no conclusive probability"
                )));
            }
            let states = StateSet::new(symmetric_pair(c).to_vec())?;
            let k = build_lossy(&states, &[1.0 - c, 1.0 - c])?;
            r.cost_sweep.push(CostRow {
                overlap: c,
                cost: cost_report(&k).action(kind),
            });
        }
        return Ok(r);
    }
    let b = inst.build()?;
    r.inputs = Some(b.echo());
    let cost = cost_report(&b.k);
    r.singular_values = cost.singulars.clone();
    r.costs = Some(costs(&cost, kind));
    let e = canonical_embedding(&b.k)?;
    r.ancilla = Some(ancilla_dims(&e, &s.tol)?);
    let realized = unitary_action(e.w(), kind)?;
    let dev = (realized - cost.action(kind)).abs();
    r.push_check(Check::new(
        "canonical_attains_cost",
        dev <= s.tol.action_bound,
        format!("|‖log W‖ - cost| = {dev:.3e}"),
    ));
    Ok(r)
}

fn surplus_check(name: &str, min_surplus: f64, tol: f64, what: &str) -> Check {
    Check::new(
        name,
        min_surplus >= -tol,
        format!("min {what} surplus {min_surplus:.3e}"),
    )
}

/// Property suite on one instance. `inject_theta_scale` replaces the
/// canonical embedding by one with scaled angles, which the suite must
/// detect.
pub fn cmd_verify(
    inst: &Instance,
    samples: usize,
    inject_theta_scale: Option<f64>,
    s: &Settings,
) -> Result<ReportFile, CliError> {
    let b = inst.build()?;
    let tol = s.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut r = ReportFile::new("verify", s.seed, s.tol_scale);
    r.inputs = Some(b.echo());
    let cost = cost_report(&b.k);
    r.singular_values = cost.singulars.clone();
    r.costs = Some(costs(&cost, NormKind::Spectral));

    let mut e = canonical_embedding(&b.k)?;
    if let Some(f) = inject_theta_scale {
        e = e.with_scaled_angles(f)?;
    }
    r.ancilla = Some(ancilla_dims(&e, &tol)?);
    let n = e.n_sys();

    let povm = povm_from_lossy(&b.k).and_then(|p| p.check(&tol));
    r.push_check(Check::new(
        "povm_valid",
        povm.is_ok(),
        povm.err().map(|e| e.to_string()).unwrap_or_else(|| "ok".into()),
    ));

    let pol = polar(b.k.matrix())?;
    let block_dev = max_abs(&(e.system_block() - &pol.positive_factor));
    let inv = e.check_invariants(&tol);
    r.push_check(Check::new(
        "embedding_reproduces_k",
        block_dev <= tol.unitary && inv.is_ok(),
        match inv {
            Ok(()) => format!("|𝒦 - system block| = {block_dev:.3e}"),
            Err(err) => err.to_string(),
        },
    ));

    let usd = validate_usd_block(&e.system_block(), &b.states, &tol)?;
    r.push_check(Check::new(
        "usd_unambiguous",
        usd.passed(),
        format!("{} non-orthogonal output pairs", usd.violations.len()),
    ));

    let mut attain: f64 = 0.0;
    for kind in [NormKind::Spectral, NormKind::HilbertSchmidt] {
        attain = attain.max((unitary_action(e.w(), kind)? - cost.action(kind)).abs());
    }
    r.push_check(Check::new(
        "canonical_attains_cost",
        attain <= tol.action_bound,
        format!("max |‖log W‖ - cost| = {attain:.3e}"),
    ));

    let mut min_surplus = [f64::INFINITY; 2];
    for _ in 0..samples {
        let us = haar_unitary(&mut rng, n);
        let ua = haar_unitary(&mut rng, e.n_anc());
        let vw = perturbed_embedding(&e, &us, &ua)?;
        for (j, kind) in [NormKind::Spectral, NormKind::HilbertSchmidt].into_iter().enumerate() {
            min_surplus[j] = min_surplus[j].min(unitary_action(&vw, kind)? - cost.action(kind));
        }
    }
    r.push_check(surplus_check("optimality_spectral", min_surplus[0], tol.action_bound, "spectral"));
    r.push_check(surplus_check("optimality_hs", min_surplus[1], tol.action_bound, "HS"));

    let mut min_sched = f64::INFINITY;
    let mut sched_err = None;
    for _ in 0..samples {
        let n_segments = rng.random_range(1..8);
        let outcome = detour_schedule(&e, &mut rng, n_segments)
            .and_then(|sched| verify_lower_bound(&sched, &b.k, tol.action_bound));
        match outcome {
            Ok(rep) => min_sched = min_sched.min(rep.surplus),
            Err(err) => {
                sched_err = Some(err.to_string());
                break;
            }
        }
    }
    r.push_check(match sched_err {
        Some(msg) => Check::new("schedule_lower_bound", false, msg),
        None => surplus_check("schedule_lower_bound", min_sched, tol.action_bound, "schedule"),
    });
    let single = optimal_hamiltonian(&e, 1.0)
        .and_then(|h| verify_lower_bound(&HamiltonianSchedule::from_optimal(&h), &b.k, tol.action_bound));
    r.push_check(match single {
        Ok(rep) => Check::new(
            "single_segment_equality",
            rep.surplus.abs() <= tol.action_bound,
            format!("surplus {:.3e}", rep.surplus),
        ),
        Err(err) => Check::new("single_segment_equality", false, err.to_string()),
    });

    let m = e.n_anc();
    let u = block_diag(&pol.unitary_factor, &CMatrix::identity(m, m)) * e.w();
    r.push_check(match equivalence_check(&b.k, &u, samples, &mut rng, &tol) {
        Ok(rep) => Check::new(
            "neumark_equivalence",
            rep.passed,
            format!(
                "max deviation conclusive {:.3e}, inconclusive {:.3e}",
                rep.max_conclusive_deviation, rep.max_inconclusive_deviation
            ),
        ),
        Err(err) => Check::new("neumark_equivalence", false, err.to_string()),
    });
    r.push_check(match concentration_cost(&u, n) {
        Ok(c) => {
            let dev = (c - cost.spectral_action).abs();
            Check::new(
                "concentration_cost",
                dev <= tol.probability,
                format!("|concentration - embedding cost| = {dev:.3e}"),
            )
        }
        Err(err) => Check::new("concentration_cost", false, err.to_string()),
    });

    let reduced = reduce_ancilla(&e, tol.ancilla_theta)?;
    let extended = extend_ancilla(&reduced, reduced.n_anc() + 2)?;
    let mut dev = max_abs(&(reduced.system_block() - e.system_block()));
    for kind in [NormKind::Spectral, NormKind::HilbertSchmidt] {
        let base = unitary_action(e.w(), kind)?;
        dev = dev.max((unitary_action(reduced.w(), kind)? - base).abs());
        dev = dev.max((unitary_action(extended.w(), kind)? - base).abs());
    }
    r.push_check(Check::new(
        "ancilla_reduce_extend",
        dev <= tol.reconstruction * 100.0,
        format!("n_anc {} -> {}, max deviation {dev:.3e}", e.n_anc(), reduced.n_anc()),
    ));
    Ok(r)
}

/// Pulse design, tradeoff and RWA validation at one or more overlaps.
pub fn cmd_atom(
    problem: Option<&ProblemFile>,
    sweep: Option<SweepRange>,
    trials: u64,
    s: &Settings,
) -> Result<ReportFile, CliError> {
    let scenario = problem.and_then(|p| p.scenario.clone()).unwrap_or_default();
    let atom = scenario.atom()?;
    let max_amplitude = scenario.max_amplitude()?;
    let mut r = ReportFile::new("atom", s.seed, s.tol_scale);
    r.atom = Some(AtomEcho {
        levels: atom.levels(),
        dipoles: atom.dipoles().map(from_complex),
        max_amplitude,
    });

    let pairs: Vec<[usd_embed_core::CVector; 2]> = match sweep.or(scenario.sweep) {
        Some(range) => {
            let points = range.points();
            if let Some(c) = points.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
                return Err(CliError::Infeasible(format!(
                    "sweep: overlap {c} admits no pulse design (need 0 < c < 1)"
                )));
            }
            points.into_iter().map(symmetric_pair).collect()
        }
        None => match problem {
            Some(p) if p.dim == 2 => {
                let set = p.state_set(None)?;
                vec![[set.states()[0].clone(), set.states()[1].clone()]]
            }
            Some(p) => {
                return Err(CliError::Validation(format!(
                    "dim: atom scenario needs 2 system levels, found {}",
                    p.dim
                )))
            }
            None => vec![symmetric_pair(DEFAULT_OVERLAP)],
        },
    };

    struct Point {
        row: AtomRow,
        tradeoff_ok: bool,
        errors: u64,
    }
    let points: Vec<Result<Point, CliError>> = pairs
        .par_iter()
        .map(|[a, b]| {
            let c = a.dotc(b).norm();
            let p = design_pulse(a, b, duration_for(c, max_amplitude))?;
            let t = tradeoff_check(&p, c);
            let fid = rwa_fidelity(&atom, &p, 0)?;
            let lab = lab_unitary(&atom, &p)?;
            let set = StateSet::new(vec![a.clone(), b.clone()])?;
            let plan = DiscriminationPlan::new(&set, Realization::Evolved { unitary: &lab, n_sys: 2 }, s.seed)?;
            let rec = plan.run(0..trials);
            Ok(Point {
                row: AtomRow {
                    overlap: c,
                    lhs: t.lhs,
                    rhs: t.rhs,
                    fidelity: fid.fidelity,
                },
                tradeoff_ok: t.passed,
                errors: rec.errors,
            })
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>, _>>()?;

    let worst_gap = points.iter().map(|p| (p.row.lhs - p.row.rhs).abs()).fold(0.0, f64::max);
    r.push_check(Check::new(
        "time_power_tradeoff",
        points.iter().all(|p| p.tradeoff_ok),
        format!("max |lhs - rhs| = {worst_gap:.3e}"),
    ));
    let min_fid = points.iter().map(|p| p.row.fidelity).fold(f64::INFINITY, f64::min);
    r.push_check(Check::new(
        "rwa_fidelity",
        min_fid >= FIDELITY_TARGET,
        format!("min fidelity {min_fid:.6} (target {FIDELITY_TARGET})"),
    ));
    let errors: u64 = points.iter().map(|p| p.errors).sum();
    r.push_check(Check::new(
        "designed_evolution_unambiguous",
        errors == 0,
        format!("{errors} conclusive errors over {} x {trials} trials", points.len()),
    ));
    r.atom_sweep = points.into_iter().map(|p| p.row).collect();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn settings() -> Settings {
        Settings::default()
    }

    #[test]
    fn discriminate_default_instance() {
        let r = cmd_discriminate(&Instance::default(), 20_000, &settings()).unwrap();
        let c = r.costs.as_ref().unwrap();
        assert!((c.spectral - PI / 3.0).abs() < 1e-10);
        assert!(r.passed, "{:?}", r.checks);
        let m = r.measurement.unwrap();
        assert_eq!(m.errors, 0);
        assert_eq!(r.ancilla.unwrap(), AncillaDims { canonical: 2, reduced: 1 });
    }

    #[test]
    fn orthogonal_states_cost_nothing() {
        let p = ProblemFile::parse(r#"{"dim": 2, "states": [[[1,0],[0,0]], [[0,0],[0,1]]]}"#).unwrap();
        let inst = Instance { problem: Some(p), ..Default::default() };
        let r = cmd_discriminate(&inst, 5000, &settings()).unwrap();
        assert!(r.costs.unwrap().spectral.abs() < 1e-12);
        assert_eq!(r.measurement.unwrap().inconclusive, 0);
        assert!(r.passed);
    }

    #[test]
    fn infeasible_probs() {
        let inst = Instance { probs: Some(vec![0.9, 0.9]), ..Default::default() };
        assert_eq!(cmd_discriminate(&inst, 10, &settings()).unwrap_err().exit_code(), 2);
        let inst = Instance { probs: Some(vec![0.9]), ..Default::default() };
        assert_eq!(cmd_cost(&inst, NormKind::Spectral, None, &settings()).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn cost_norms_and_sweep() {
        let r = cmd_cost(&Instance::default(), NormKind::HilbertSchmidt, None, &settings()).unwrap();
        assert!((r.costs.unwrap().selected - 2f64.sqrt() * PI / 3.0).abs() < 1e-10);
        let sweep: SweepRange = "0.1:0.9:9".parse().unwrap();
        let r = cmd_cost(&Instance::default(), NormKind::Spectral, Some(sweep), &settings()).unwrap();
        assert_eq!(r.cost_sweep.len(), 9);
        for row in &r.cost_sweep {
            let c = row.overlap;
            assert!((row.cost - (2.0 * c / (1.0 + c)).sqrt().asin()).abs() < 1e-12);
        }
        let k_unitary = ProblemFile::parse(r#"{"dim": 2, "states": [[[0.6,0],[0.8,0]], [[-0.8,0],[0.6,0]]]}"#).unwrap();
        let inst = Instance { problem: Some(k_unitary), ..Default::default() };
        assert!(cmd_cost(&inst, NormKind::Spectral, None, &settings()).unwrap().costs.unwrap().spectral < 1e-12);
    }

    #[test]
    fn verify_passes_and_detects_injection() {
        let r = cmd_verify(&Instance::default(), 50, None, &settings()).unwrap();
        assert!(r.passed, "{:?}", r.failed_checks().collect::<Vec<_>>());
        let r = cmd_verify(&Instance::default(), 50, Some(0.8), &settings()).unwrap();
        assert!(!r.passed);
        let failed: Vec<&str> = r.failed_checks().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"embedding_reproduces_k"));
        assert!(failed.contains(&"optimality_spectral") || failed.contains(&"canonical_attains_cost"));
    }

    #[test]
    fn atom_sweep_and_degenerate_endpoint() {
        let sweep: SweepRange = "0.2:0.8:3".parse().unwrap();
        let r = cmd_atom(None, Some(sweep), 2000, &settings()).unwrap();
        assert_eq!(r.atom_sweep.len(), 3);
        assert!(r.passed, "{:?}", r.checks);
        let bad: SweepRange = "0.5:1.0:3".parse().unwrap();
        assert_eq!(cmd_atom(None, Some(bad), 10, &settings()).unwrap_err().exit_code(), 2);
    }
}
