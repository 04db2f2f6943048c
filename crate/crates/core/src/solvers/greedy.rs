use std::time::Instant;

use super::{reject_empty, DeltaCache, RunResult, SolverConfig, TracePoint};
use crate::error::Result;
use crate::model::{HuboInstance, SpinConfig};
use crate::rng::seeded;

/// Steepest single-flip descent: flips the variable with the most negative
/// delta (lowest index on ties) until no flip lowers the energy.
pub fn greedy_descent(instance: &HuboInstance, start: &SpinConfig) -> Result<SpinConfig> {
    let mut cache = DeltaCache::new(instance, start.clone())?;
    descend(&mut cache);
    Ok(cache.into_config())
}

/// Returns the number of flips made.
pub(crate) fn descend(cache: &mut DeltaCache) -> u64 {
    let mut steps = 0;
    while let Some(v) = cache.steepest_descent_move() {
        cache.flip_unchecked(v);
        steps += 1;
    }
    steps
}

/// Greedy descent from one random configuration drawn from `seed`.
pub fn run_greedy(instance: &HuboInstance, cfg: &SolverConfig, seed: u64) -> Result<RunResult> {
    reject_empty(instance)?;
    cfg.validate()?;
    let start = Instant::now();
    let n = instance.n_vars();
    let initial = SpinConfig::random(n, &mut seeded(seed));
    let mut cache = DeltaCache::new(instance, initial)?;
    let steps = descend(&mut cache);
    let elapsed = start.elapsed().as_secs_f64();
    let best_energy = cache.energy();
    Ok(RunResult {
        solver: cfg.name().to_string(),
        config_hash: cfg.config_hash(),
        best_energy,
        best_config: cache.into_config(),
        trace: vec![TracePoint {
            t: elapsed,
            energy: best_energy,
        }],
        // every scan proposes all n flips
        attempted_flips: (steps + 1) * n as u64,
        accepted_flips: steps,
        elapsed_total: elapsed,
        diagnostics: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InstanceMetadata;

    #[test]
    fn symmetric_pair_breaks_tie_on_lowest_index() {
        let h = HuboInstance::new(2, vec![(vec![0, 1], 1.0)], InstanceMetadata::default()).unwrap();
        let out = greedy_descent(&h, &SpinConfig::all_up(2)).unwrap();
        assert_eq!(out.spins(), &[-1, 1]);
        let again = greedy_descent(&h, &out).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn run_reports_consistent_result() {
        let h = HuboInstance::new(2, vec![(vec![0, 1], 1.0)], InstanceMetadata::default()).unwrap();
        let r = run_greedy(&h, &SolverConfig::greedy(), 5).unwrap();
        assert_eq!(r.best_energy, -1.0);
        r.check_consistency(&h).unwrap();
    }
}
