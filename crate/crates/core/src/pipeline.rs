//! Staged workflow: warm start, a pluggable middle stage, refinement.
//!
//! A candidate pool flows from stage to stage. Each stage must hand on
//! a pool whose best energy is no worse than the one it received, so the
//! per-stage best energies of a run never increase.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{HuboError, Result};
use crate::harness::read_external_trace;
use crate::model::{evaluate_energy, HuboInstance, SpinConfig};
use crate::rng::{derive_seed, open_unit, seeded};
use crate::solvers::{
    greedy_descent, run_mts_from_population, run_sa, Diagnostics, MtsParams, RunResult, SaParams, SolverConfig,
    TracePoint,
};

pub const DEFAULT_POOL_CAP: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub config: SpinConfig,
    pub energy: f64,
}

/// Multiset of configurations, kept sorted best first and truncated to
/// the best `cap` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    cap: usize,
    members: Vec<Candidate>,
}

impl Default for CandidatePool {
    fn default() -> Self {
        CandidatePool::new(DEFAULT_POOL_CAP)
    }
}

impl CandidatePool {
    pub fn new(cap: usize) -> Self {
        CandidatePool {
            cap: cap.max(1),
            members: Vec::new(),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Candidate] {
        &self.members
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.members.first()
    }

    pub fn best_energy(&self) -> Option<f64> {
        self.best().map(|c| c.energy)
    }

    /// Inserts after equal energies, so earlier arrivals win ties.
    pub fn push(&mut self, config: SpinConfig, energy: f64) {
        let at = self.members.partition_point(|m| m.energy <= energy);
        if at >= self.cap {
            return;
        }
        self.members.insert(at, Candidate { config, energy });
        self.members.truncate(self.cap);
    }

    /// Evaluates and inserts.
    pub fn push_config(&mut self, instance: &HuboInstance, config: SpinConfig) -> Result<()> {
        let e = evaluate_energy(instance, &config)?;
        self.push(config, e);
        Ok(())
    }

    pub fn extend_from(&mut self, other: &CandidatePool) {
        for m in &other.members {
            self.push(m.config.clone(), m.energy);
        }
    }
}

/// One step of a pipeline.
pub trait Stage: Send + Sync {
    fn label(&self) -> String;

    /// Produces the outgoing pool and a result describing the stage's own
    /// work. `budget` is wall-clock seconds.
    fn run(
        &self,
        instance: &HuboInstance,
        pool: &CandidatePool,
        seed: u64,
        budget: f64,
    ) -> Result<(CandidatePool, RunResult)>;
}

fn stage_result(label: &str, pool: &CandidatePool, start: Instant, attempted: u64, accepted: u64) -> RunResult {
    let best = pool.best().expect("stage pools are nonempty");
    let t = start.elapsed().as_secs_f64();
    RunResult {
        solver: label.to_string(),
        config_hash: String::new(),
        best_energy: best.energy,
        best_config: best.config.clone(),
        trace: vec![TracePoint { t, energy: best.energy }],
        attempted_flips: attempted,
        accepted_flips: accepted,
        elapsed_total: t,
        diagnostics: Diagnostics::default(),
    }
}

/// Simulated annealing warm start, bounded by the stage budget. The
/// incoming pool is passed through.
#[derive(Debug, Clone, PartialEq)]
pub struct SaWarmStart {
    pub params: SaParams,
    pub threads: usize,
}

impl Stage for SaWarmStart {
    fn label(&self) -> String {
        "sa-warm-start".into()
    }

    fn run(
        &self,
        instance: &HuboInstance,
        pool: &CandidatePool,
        seed: u64,
        budget: f64,
    ) -> Result<(CandidatePool, RunResult)> {
        let cfg = SolverConfig::sa(self.params)
            .with_threads(self.threads)
            .with_time_limit(budget);
        let r = run_sa(instance, &cfg, seed)?;
        let mut out = pool.clone();
        out.push(r.best_config.clone(), r.best_energy);
        Ok((out, r))
    }
}

/// Stand-in for the quantum middle stage.
#[derive(Debug, Clone, PartialEq)]
pub enum SurrogateStage {
    /// Passes the pool through untouched.
    Identity,
    /// Emits the incumbent plus `copies` perturbed copies, each spin
    /// flipped with probability `flip_probability`.
    PerturbRestart { copies: usize, flip_probability: f64 },
    /// Injects recorded configurations, e.g. hardware samples.
    ExternalTrace { configs: Vec<SpinConfig> },
}

impl SurrogateStage {
    /// Reads the configurations of an external trace file. Entries without
    /// spins are skipped; a wrong spin count is rejected.
    pub fn external_from_file(path: &Path, n_vars: usize) -> Result<Self> {
        let entries = read_external_trace(path)?;
        let mut configs = Vec::new();
        for (line, e) in entries.into_iter().enumerate() {
            if let Some(c) = e.spins {
                if c.len() != n_vars {
                    return Err(HuboError::Dimension(format!(
                        "{} entry {}: {} spins for an instance of {n_vars} variables",
                        path.display(),
                        line + 1,
                        c.len()
                    )));
                }
                configs.push(c);
            }
        }
        Ok(SurrogateStage::ExternalTrace { configs })
    }
}

impl Stage for SurrogateStage {
    fn label(&self) -> String {
        match self {
            SurrogateStage::Identity => "identity".into(),
            SurrogateStage::PerturbRestart { .. } => "perturb-restart".into(),
            SurrogateStage::ExternalTrace { .. } => "external-trace".into(),
        }
    }

    fn run(
        &self,
        instance: &HuboInstance,
        pool: &CandidatePool,
        seed: u64,
        _budget: f64,
    ) -> Result<(CandidatePool, RunResult)> {
        let start = Instant::now();
        let mut out = pool.clone();
        match self {
            SurrogateStage::Identity => {}
            SurrogateStage::PerturbRestart {
                copies,
                flip_probability,
            } => {
                let p = *flip_probability;
                if !(0.0..=1.0).contains(&p) {
                    return Err(HuboError::Config(format!(
                        "flip probability must lie in [0, 1], got {p}"
                    )));
                }
                let incumbent = pool
                    .best()
                    .ok_or_else(|| HuboError::Invalid("perturb-restart needs a nonempty pool".into()))?
                    .config
                    .clone();
                let mut rng = seeded(seed);
                for _ in 0..*copies {
                    let mut c = incumbent.clone();
                    for v in 0..c.len() {
                        if open_unit(&mut rng) < p {
                            c.flip(v);
                        }
                    }
                    out.push_config(instance, c)?;
                }
            }
            SurrogateStage::ExternalTrace { configs } => {
                for c in configs {
                    if c.len() != instance.n_vars() {
                        return Err(HuboError::Dimension(format!(
                            "external configuration has {} spins for an instance of {} variables",
                            c.len(),
                            instance.n_vars()
                        )));
                    }
                    out.push_config(instance, c.clone())?;
                }
            }
        }
        if out.is_empty() {
            return Err(HuboError::Invalid(format!(
                "{} stage produced an empty pool",
                self.label()
            )));
        }
        let r = stage_result(&self.label(), &out, start, 0, 0);
        Ok((out, r))
    }
}

/// Greedy descent from up to `max_starts` of the best pool members, or
/// from one random configuration when the pool is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyRefine {
    pub max_starts: usize,
}

impl Default for GreedyRefine {
    fn default() -> Self {
        GreedyRefine { max_starts: 16 }
    }
}

impl Stage for GreedyRefine {
    fn label(&self) -> String {
        "greedy-refine".into()
    }

    fn run(
        &self,
        instance: &HuboInstance,
        pool: &CandidatePool,
        seed: u64,
        _budget: f64,
    ) -> Result<(CandidatePool, RunResult)> {
        let start = Instant::now();
        let starts: Vec<SpinConfig> = if pool.is_empty() {
            vec![SpinConfig::random(instance.n_vars(), &mut seeded(seed))]
        } else {
            pool.members()
                .iter()
                .take(self.max_starts.max(1))
                .map(|m| m.config.clone())
                .collect()
        };
        let mut out = pool.clone();
        let n = instance.n_vars() as u64;
        let mut attempted = 0;
        for s in &starts {
            let refined = greedy_descent(instance, s)?;
            attempted += n;
            out.push_config(instance, refined)?;
        }
        let r = stage_result(&self.label(), &out, start, attempted, 0);
        Ok((out, r))
    }
}

/// Memetic tabu search seeded with the best pool members, padded with
/// random configurations, bounded by the stage budget.
#[derive(Debug, Clone, PartialEq)]
pub struct MtsRefine {
    pub params: MtsParams,
    pub threads: usize,
}

impl Stage for MtsRefine {
    fn label(&self) -> String {
        "mts-refine".into()
    }

    fn run(
        &self,
        instance: &HuboInstance,
        pool: &CandidatePool,
        seed: u64,
        budget: f64,
    ) -> Result<(CandidatePool, RunResult)> {
        let mut initial: Vec<SpinConfig> = pool
            .members()
            .iter()
            .take(self.params.population)
            .map(|m| m.config.clone())
            .collect();
        let mut rng = seeded(derive_seed(seed, 1));
        while initial.len() < self.params.population {
            initial.push(SpinConfig::random(instance.n_vars(), &mut rng));
        }
        let cfg = SolverConfig::mts(self.params)
            .with_threads(self.threads)
            .with_time_limit(budget);
        let r = run_mts_from_population(instance, &cfg, seed, initial)?;
        let mut out = pool.clone();
        out.push(r.best_config.clone(), r.best_energy);
        Ok((out, r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub label: String,
    /// Best pool energy after the stage.
    pub best_energy: f64,
    /// Seconds.
    pub duration: f64,
    pub run: RunResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub stages: Vec<StageRecord>,
    pub best_config: SpinConfig,
    pub best_energy: f64,
    /// Seconds, from before the first stage to after the last check.
    pub total: f64,
    /// `total` minus the summed stage durations.
    pub overhead: f64,
    pub seed: u64,
}

impl PipelineResult {
    pub fn overhead_fraction(&self) -> f64 {
        if self.total > 0.0 {
            self.overhead / self.total
        } else {
            0.0
        }
    }
}

/// Runs `stages` in order. Stage `i` receives seed `derive_seed(seed, i)`
/// and `budgets[i]` seconds, so dropping a later stage never changes an
/// earlier one.
pub fn run_pipeline(
    instance: &HuboInstance,
    stages: &[Box<dyn Stage>],
    seed: u64,
    budgets: &[f64],
) -> Result<PipelineResult> {
    if stages.is_empty() {
        return Err(HuboError::Config("a pipeline needs at least one stage".into()));
    }
    if budgets.len() != stages.len() {
        return Err(HuboError::Config(format!(
            "{} stages but {} budgets",
            stages.len(),
            budgets.len()
        )));
    }
    if let Some(b) = budgets.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        return Err(HuboError::Config(format!("stage budgets must be positive, got {b}")));
    }
    let tol = 1e-9 * instance.coefficient_scale().max(1.0);
    let start = Instant::now();
    let mut pool = CandidatePool::default();
    let mut records = Vec::with_capacity(stages.len());
    for (i, (stage, &budget)) in stages.iter().zip(budgets).enumerate() {
        let label = stage.label();
        let t0 = Instant::now();
        let (out, run) = stage.run(instance, &pool, derive_seed(seed, i as u64), budget)?;
        let duration = t0.elapsed().as_secs_f64();
        let violation = |message: String| HuboError::ContractViolation {
            stage: label.clone(),
            message,
        };
        let best = out.best().ok_or_else(|| violation("empty outgoing pool".into()))?;
        if let Some(incoming) = pool.best_energy() {
            if best.energy > incoming {
                return Err(violation(format!(
                    "best energy rose from {incoming} to {}",
                    best.energy
                )));
            }
        }
        let e = evaluate_energy(instance, &best.config)?;
        if (e - best.energy).abs() > tol {
            return Err(violation(format!(
                "pool best claims {} but evaluates to {e}",
                best.energy
            )));
        }
        records.push(StageRecord {
            label,
            best_energy: best.energy,
            duration,
            run,
        });
        pool = out;
    }
    let total = start.elapsed().as_secs_f64();
    let best = pool.best().expect("checked nonempty");
    let summed: f64 = records.iter().map(|r| r.duration).sum();
    Ok(PipelineResult {
        best_config: best.config.clone(),
        best_energy: best.energy,
        stages: records,
        total,
        overhead: total - summed,
        seed,
    })
}

/// SA warm start, identity surrogate, greedy refinement.
pub fn default_stages(sa: SaParams, threads: usize) -> Vec<Box<dyn Stage>> {
    vec![
        Box::new(SaWarmStart { params: sa, threads }),
        Box::new(SurrogateStage::Identity),
        Box::new(GreedyRefine::default()),
    ]
}
