use rayon::prelude::*;
use usd_embed_core::dynamics::{DiscriminationPlan, MeasurementRecord};

const CHUNK: u64 = 8192;

/// Runs trials `0..trials` across the rayon pool. Each trial draws from its
/// own stream, so the merged record equals a serial run.
pub fn simulate_parallel(plan: &DiscriminationPlan, trials: u64) -> MeasurementRecord {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| plan.run(c * CHUNK..((c + 1) * CHUNK).min(trials)))
        .reduce_with(|mut a, b| {
            a.merge(&b);
            a
        })
        .unwrap_or_else(|| plan.run(0..0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use usd_embed_core::atomlaser::symmetric_pair;
    use usd_embed_core::dynamics::Realization;
    use usd_embed_core::embedding::canonical_embedding;
    use usd_embed_core::usd::{build_lossy, StateSet};

    #[test]
    fn parallel_equals_serial() {
        let s = StateSet::new(symmetric_pair(0.6).to_vec()).unwrap();
        let k = build_lossy(&s, &[0.4, 0.4]).unwrap();
        let e = canonical_embedding(&k).unwrap();
        let plan = DiscriminationPlan::new(&s, Realization::Canonical(&e), 11).unwrap();
        for trials in [0, 1, CHUNK - 1, CHUNK, 3 * CHUNK + 17] {
            assert_eq!(simulate_parallel(&plan, trials), plan.run(0..trials));
        }
    }
}
