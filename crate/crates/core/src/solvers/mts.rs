use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::local::DeltaCache;
use super::trace::{merge_traces, TraceRecorder};
use super::{reject_empty, Diagnostics, RunResult, SolverConfig, SolverVariant};
use crate::error::{HuboError, Result};
use crate::model::{HuboInstance, SpinConfig};
use crate::rng::{open_unit, stream, HuboRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MtsParams {
    pub population: usize,
    pub generations: usize,
    /// Iterations a flipped variable stays tabu; `ceil(N / 10)` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabu_tenure: Option<usize>,
    /// Per-spin mutation probability; `1 / N` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation_rate: Option<f64>,
    /// Tabu iterations per child; `N` when unset, 0 disables local search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabu_iterations: Option<usize>,
    #[serde(default = "yes")]
    pub crossover: bool,
    /// Parents are drawn from this best fraction of the population.
    #[serde(default = "half")]
    pub elite_fraction: f64,
    /// Children bred per generation; they are improved in parallel.
    #[serde(default = "one")]
    pub offspring: usize,
}

fn yes() -> bool {
    true
}

fn half() -> f64 {
    0.5
}

fn one() -> usize {
    1
}

impl Default for MtsParams {
    fn default() -> Self {
        MtsParams {
            population: 10,
            generations: 5000,
            tabu_tenure: None,
            mutation_rate: None,
            tabu_iterations: None,
            crossover: true,
            elite_fraction: half(),
            offspring: 1,
        }
    }
}

impl MtsParams {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.generations == 0 || self.offspring == 0 {
            return Err(HuboError::Config(
                "MTS needs population, generations and offspring >= 1".into(),
            ));
        }
        if self.crossover && self.population < 2 {
            return Err(HuboError::Config(format!(
                "crossover needs a population of at least 2, got {}",
                self.population
            )));
        }
        if let Some(m) = self.mutation_rate {
            if !(0.0..=1.0).contains(&m) {
                return Err(HuboError::Config(format!("mutation_rate must lie in [0, 1], got {m}")));
            }
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(HuboError::Config(format!(
                "elite_fraction must lie in (0, 1], got {}",
                self.elite_fraction
            )));
        }
        Ok(())
    }

    fn resolved(&self, n: usize) -> Resolved {
        Resolved {
            tenure: self.tabu_tenure.unwrap_or(n.div_ceil(10)).min(n.saturating_sub(1)),
            mutation_rate: self.mutation_rate.unwrap_or(1.0 / n as f64),
            iterations: self.tabu_iterations.unwrap_or(n),
            elite: ((self.elite_fraction * self.population as f64).ceil() as usize)
                .clamp(if self.crossover { 2 } else { 1 }, self.population),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Resolved {
    tenure: usize,
    mutation_rate: f64,
    iterations: usize,
    elite: usize,
}

/// Aspiration rule: a tabu move is admissible only when it would reach an
/// energy strictly below the best known.
#[inline]
pub fn tabu_admissible(is_tabu: bool, current: f64, delta: f64, best_known: f64) -> bool {
    !is_tabu || current + delta < best_known
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabuOutcome {
    pub best_config: SpinConfig,
    pub best_energy: f64,
    pub attempted_flips: u64,
    pub accepted_flips: u64,
}

/// Single-flip tabu search from `start`. Each iteration takes the best
/// admissible move (lowest index on ties), even if it raises the energy.
/// Aspiration compares against the lower of this search's best and
/// `best_known`.
pub fn tabu_search(
    instance: &HuboInstance,
    start: &SpinConfig,
    tenure: usize,
    iterations: usize,
    best_known: f64,
) -> Result<TabuOutcome> {
    let cache = DeltaCache::new(instance, start.clone())?;
    Ok(tabu_from_cache(cache, tenure, iterations, best_known))
}

fn tabu_from_cache(mut cache: DeltaCache, tenure: usize, iterations: usize, best_known: f64) -> TabuOutcome {
    let n = cache.n_vars();
    let mut tabu_until = vec![0usize; n];
    let mut best_fixed = cache.energy_fixed();
    let mut best_config = cache.config().clone();
    let mut accepted = 0u64;
    for it in 1..=iterations {
        let current = cache.energy_fixed();
        let mut pick: Option<(i128, usize)> = None;
        for (v, &until) in tabu_until.iter().enumerate() {
            let d = cache.delta_fixed(v);
            let is_tabu = until >= it;
            let target = current + d;
            let admissible = !is_tabu || target < best_fixed || cache.to_f64(target) < best_known;
            if admissible && pick.is_none_or(|(b, _)| d < b) {
                pick = Some((d, v));
            }
        }
        let Some((_, v)) = pick else { break };
        cache.flip_unchecked(v);
        accepted += 1;
        tabu_until[v] = it + tenure;
        if cache.energy_fixed() < best_fixed {
            best_fixed = cache.energy_fixed();
            best_config.clone_from(cache.config());
        }
    }
    TabuOutcome {
        best_energy: cache.to_f64(best_fixed),
        best_config,
        attempted_flips: iterations as u64 * n as u64,
        accepted_flips: accepted,
    }
}

#[derive(Debug, Clone)]
struct Member {
    config: SpinConfig,
    energy: f64,
}

/// Memetic tabu search from a random initial population.
pub fn run_mts(instance: &HuboInstance, cfg: &SolverConfig, seed: u64) -> Result<RunResult> {
    reject_empty(instance)?;
    cfg.validate()?;
    let SolverVariant::Mts(params) = &cfg.variant else {
        return Err(HuboError::Config(format!("run_mts given a {} config", cfg.name())));
    };
    let n = instance.n_vars();
    let initial = (0..params.population)
        .map(|i| SpinConfig::random(n, &mut stream(seed, i as u64 + 1)))
        .collect();
    mts(instance, cfg, params, seed, initial, Instant::now())
}

/// Memetic tabu search from a given population, which must hold exactly
/// `population` configurations.
pub fn run_mts_from_population(
    instance: &HuboInstance,
    cfg: &SolverConfig,
    seed: u64,
    initial: Vec<SpinConfig>,
) -> Result<RunResult> {
    reject_empty(instance)?;
    cfg.validate()?;
    let SolverVariant::Mts(params) = &cfg.variant else {
        return Err(HuboError::Config(format!("run_mts given a {} config", cfg.name())));
    };
    if initial.len() != params.population {
        return Err(HuboError::Config(format!(
            "initial population has {} members, config asks for {}",
            initial.len(),
            params.population
        )));
    }
    if let Some(bad) = initial.iter().find(|c| c.len() != instance.n_vars()) {
        return Err(HuboError::Dimension(format!(
            "initial configuration has {} spins but the instance has {} variables",
            bad.len(),
            instance.n_vars()
        )));
    }
    mts(instance, cfg, params, seed, initial, Instant::now())
}

fn mts(
    instance: &HuboInstance,
    cfg: &SolverConfig,
    params: &MtsParams,
    seed: u64,
    initial: Vec<SpinConfig>,
    start: Instant,
) -> Result<RunResult> {
    let n = instance.n_vars();
    let deadline = cfg.deadline(start);
    let r = params.resolved(n);
    let pool = cfg.pool()?;
    let mut recorder = TraceRecorder::new(start);
    let mut attempted = 0u64;
    let mut accepted = 0u64;

    let improved: Vec<TabuOutcome> = pool.install(|| {
        initial
            .into_par_iter()
            .map(|c| {
                let cache = DeltaCache::new(instance, c).expect("dimension checked");
                tabu_from_cache(cache, r.tenure, r.iterations, f64::INFINITY)
            })
            .collect()
    });
    let mut population: Vec<Member> = Vec::with_capacity(params.population);
    for o in improved {
        attempted += o.attempted_flips;
        accepted += o.accepted_flips;
        population.push(Member {
            config: o.best_config,
            energy: o.best_energy,
        });
    }
    sort_population(&mut population);
    recorder.improve(population[0].energy);

    let child_stream_base = params.population as u64 + 1;
    let mut generations = 0u64;
    for g in 0..params.generations {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let best_known = population[0].energy;
        let snapshot = &population;
        let children: Vec<TabuOutcome> = pool.install(|| {
            (0..params.offspring)
                .into_par_iter()
                .map(|c| {
                    let id = child_stream_base + (g * params.offspring + c) as u64;
                    let mut rng = stream(seed, id);
                    let child = breed(snapshot, params, &r, &mut rng);
                    let cache = DeltaCache::new(instance, child).expect("dimension checked");
                    tabu_from_cache(cache, r.tenure, r.iterations, best_known)
                })
                .collect()
        });
        for o in children {
            attempted += o.attempted_flips;
            accepted += o.accepted_flips;
            replace_worst(
                &mut population,
                Member {
                    config: o.best_config,
                    energy: o.best_energy,
                },
            );
        }
        generations += 1;
        recorder.improve(population[0].energy);
        recorder.heartbeat();
    }

    let best = population.swap_remove(0);
    let elapsed = start.elapsed().as_secs_f64();
    let trace = merge_traces([recorder.into_points()], best.energy, elapsed);
    Ok(RunResult {
        solver: cfg.name().to_string(),
        config_hash: cfg.config_hash(),
        best_energy: best.energy,
        best_config: best.config,
        trace,
        attempted_flips: attempted,
        accepted_flips: accepted,
        elapsed_total: elapsed,
        diagnostics: Diagnostics {
            generations: Some(generations),
            ..Default::default()
        },
    })
}

/// Best first; ties keep their order.
fn sort_population(population: &mut [Member]) {
    population.sort_by(|a, b| a.energy.total_cmp(&b.energy));
}

fn breed(population: &[Member], params: &MtsParams, r: &Resolved, rng: &mut HuboRng) -> SpinConfig {
    let pick = |rng: &mut HuboRng| (open_unit(rng) * r.elite as f64) as usize;
    let a = pick(rng);
    let mut child = population[a].config.clone();
    if params.crossover {
        let mut b = pick(rng);
        while b == a {
            b = pick(rng);
        }
        let other = population[b].config.spins();
        for (s, &o) in child.spins_mut().iter_mut().zip(other) {
            if open_unit(rng) < 0.5 {
                *s = o;
            }
        }
    }
    if r.mutation_rate > 0.0 {
        for s in child.spins_mut() {
            if open_unit(rng) < r.mutation_rate {
                *s = -*s;
            }
        }
    }
    child
}

/// Elitist replacement: the child takes the worst slot when it beats it
/// and is not already present.
fn replace_worst(population: &mut Vec<Member>, child: Member) {
    let worst = population.last().expect("population is nonempty");
    if child.energy >= worst.energy || population.iter().any(|m| m.config == child.config) {
        return;
    }
    population.pop();
    let at = population.partition_point(|m| m.energy <= child.energy);
    population.insert(at, child);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InstanceMetadata;

    fn frustrated() -> HuboInstance {
        HuboInstance::new(
            4,
            vec![
                (vec![0, 1], 1.0),
                (vec![1, 2], 1.0),
                (vec![0, 2], 1.0),
                (vec![1, 2, 3], -0.5),
                (vec![3], 0.25),
            ],
            InstanceMetadata::default(),
        )
        .unwrap()
    }

    #[test]
    fn aspiration_accepts_strict_improvement_only() {
        assert!(tabu_admissible(false, 0.0, 5.0, -10.0));
        assert!(tabu_admissible(true, -3.0, -1.0, -3.5));
        // reaching the best exactly is not an improvement
        assert!(!tabu_admissible(true, -3.0, -0.5, -3.5));
    }

    #[test]
    fn tabu_counts_and_descends() {
        let h = frustrated();
        let out = tabu_search(&h, &SpinConfig::all_up(4), 1, 20, f64::INFINITY).unwrap();
        assert_eq!(out.attempted_flips, 80);
        assert_eq!(out.accepted_flips, 20);
        let gs = crate::oracle::brute_force_ground_state(&h).unwrap();
        assert_eq!(out.best_energy, gs.energy);
    }

    #[test]
    fn identical_population_without_mutation_is_stationary() {
        let h = frustrated();
        let cfg = SolverConfig::mts(MtsParams {
            population: 4,
            generations: 30,
            mutation_rate: Some(0.0),
            tabu_iterations: Some(0),
            ..Default::default()
        });
        let start = SpinConfig::all_up(4);
        let e0 = crate::model::evaluate_energy(&h, &start).unwrap();
        let r = run_mts_from_population(&h, &cfg, 1, vec![start.clone(); 4]).unwrap();
        assert_eq!(r.best_energy, e0);
        assert_eq!(r.best_config, start);
        assert!(r.trace.iter().all(|p| p.energy == e0));
    }

    #[test]
    fn rejects_tiny_population_with_crossover() {
        let h = frustrated();
        let cfg = SolverConfig::mts(MtsParams {
            population: 1,
            ..Default::default()
        });
        assert!(run_mts(&h, &cfg, 0).is_err());
        let ok = SolverConfig::mts(MtsParams {
            population: 1,
            generations: 5,
            crossover: false,
            ..Default::default()
        });
        run_mts(&h, &ok, 0).unwrap().check_consistency(&h).unwrap();
    }
}
