use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schedule::{make_schedule, ScheduleParams};
use super::trace::TraceRecorder;
use super::{metropolis_accept, reject_empty, Diagnostics, RunResult, SolverConfig, SolverVariant};
use crate::error::{HuboError, Result};
use crate::model::{HuboInstance, SpinConfig, VariableIndexTable};
use crate::rng::{derive_seed, open_unit, stream, HuboRng};

const LADDER_TAG: u64 = 0x9e7;
const EXCHANGE_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PtParams {
    pub n_replicas: usize,
    /// Coldest rung; derived like the SA cold end when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Sweeps between exchange rounds.
    #[serde(default = "one")]
    pub exchange_interval: usize,
    /// Stop after this many sweeps per replica. A run needs this or a time limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<u64>,
}

fn one() -> usize {
    1
}

impl Default for PtParams {
    fn default() -> Self {
        PtParams {
            n_replicas: 16,
            t_min: None,
            t_max: None,
            exchange_interval: 1,
            max_sweeps: None,
        }
    }
}

impl PtParams {
    pub fn validate(&self, time_limit: Option<f64>) -> Result<()> {
        if self.n_replicas < 2 {
            return Err(HuboError::Config(format!(
                "PT needs at least 2 replicas, got {}",
                self.n_replicas
            )));
        }
        if self.exchange_interval == 0 {
            return Err(HuboError::Config("PT exchange_interval must be >= 1".into()));
        }
        if self.max_sweeps == Some(0) {
            return Err(HuboError::Config("PT max_sweeps must be >= 1".into()));
        }
        if self.max_sweeps.is_none() && time_limit.is_none() {
            return Err(HuboError::Config("PT needs max_sweeps or a time limit".into()));
        }
        for t in [self.t_min, self.t_max].into_iter().flatten() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(HuboError::Config(format!("PT temperature must be positive, got {t}")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.t_min, self.t_max) {
            if lo >= hi {
                return Err(HuboError::Config(format!("PT needs t_min < t_max (got {lo} and {hi})")));
            }
        }
        Ok(())
    }

    /// Geometric ladder, coldest first.
    pub fn ladder(&self, instance: &HuboInstance, seed: u64) -> Result<Vec<f64>> {
        let ends = make_schedule(
            instance,
            &ScheduleParams {
                t_hot: self.t_max,
                t_cold: self.t_min,
                n_steps: self.n_replicas,
                ..Default::default()
            },
            derive_seed(seed, LADDER_TAG),
        )?;
        let k = (self.n_replicas - 1) as f64;
        Ok((0..self.n_replicas)
            .map(|i| ends.t_cold * (ends.t_hot / ends.t_cold).powf(i as f64 / k))
            .collect())
    }
}

/// Replica-exchange acceptance probability `min(1, exp((b_a - b_b)(e_a - e_b)))`.
pub fn exchange_probability(beta_a: f64, beta_b: f64, e_a: f64, e_b: f64) -> f64 {
    let x = (beta_a - beta_b) * (e_a - e_b);
    if x >= 0.0 {
        1.0
    } else {
        x.exp()
    }
}

struct Replica {
    config: SpinConfig,
    table: VariableIndexTable,
    best_fixed: i128,
    best_config: SpinConfig,
    accepted: u64,
}

struct Slot {
    temperature: f64,
    rng: HuboRng,
    replica: Replica,
}

impl Slot {
    fn sweep(&mut self, n: usize) {
        let r = &mut self.replica;
        let spins = r.config.spins_mut();
        for v in 0..n {
            let delta = r.table.delta_unchecked(v);
            if delta <= 0.0 || metropolis_accept(delta, self.temperature, open_unit(&mut self.rng)) {
                r.table.flip_unchecked(spins, v);
                r.accepted += 1;
                if r.table.energy_fixed() < r.best_fixed {
                    r.best_fixed = r.table.energy_fixed();
                    r.best_config.spins_mut().copy_from_slice(spins);
                }
            }
        }
    }
}

/// Parallel tempering. Temperatures stay with their slots; exchanges swap
/// the replica states (configuration, table, personal best) between
/// neighbouring slots. Each slot owns ChaCha stream `k + 1`; exchanges draw
/// from stream 0, alternating even and odd pairs between rounds.
pub fn run_pt(instance: &HuboInstance, cfg: &SolverConfig, seed: u64) -> Result<RunResult> {
    reject_empty(instance)?;
    cfg.validate()?;
    let SolverVariant::Pt(params) = &cfg.variant else {
        return Err(HuboError::Config(format!("run_pt given a {} config", cfg.name())));
    };
    let start = Instant::now();
    let deadline = cfg.deadline(start);
    let n = instance.n_vars();
    let temps = params.ladder(instance, seed)?;
    let pool = cfg.pool()?;

    let mut slots: Vec<Slot> = temps
        .iter()
        .enumerate()
        .map(|(k, &temperature)| {
            let mut rng = stream(seed, k as u64 + 1);
            let config = SpinConfig::random(n, &mut rng);
            let table = VariableIndexTable::build_unchecked(instance, config.spins());
            Slot {
                temperature,
                rng,
                replica: Replica {
                    best_fixed: table.energy_fixed(),
                    best_config: config.clone(),
                    config,
                    table,
                    accepted: 0,
                },
            }
        })
        .collect();
    let mut exchange_rng = stream(seed, EXCHANGE_STREAM);
    let pairs = slots.len() - 1;
    let mut tried = vec![0u64; pairs];
    let mut swapped = vec![0u64; pairs];
    let mut recorder = TraceRecorder::new(start);
    let global_best = |slots: &[Slot]| {
        slots
            .iter()
            .map(|s| s.replica.best_fixed)
            .min()
            .expect("at least two replicas")
    };
    recorder.improve(slots[0].replica.table.fixed_to_f64(global_best(&slots)));

    let mut sweeps = 0u64;
    let mut round = 0u64;
    loop {
        if params.max_sweeps.is_some_and(|m| sweeps >= m) || deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let batch = match params.max_sweeps {
            Some(m) => (m - sweeps).min(params.exchange_interval as u64),
            None => params.exchange_interval as u64,
        };
        pool.install(|| {
            slots.par_iter_mut().for_each(|s| {
                for _ in 0..batch {
                    s.sweep(n);
                }
            })
        });
        sweeps += batch;

        for i in ((round % 2) as usize..pairs).step_by(2) {
            let (a, b) = (&slots[i], &slots[i + 1]);
            let p = exchange_probability(
                1.0 / a.temperature,
                1.0 / b.temperature,
                a.replica.table.energy(),
                b.replica.table.energy(),
            );
            tried[i] += 1;
            if p >= 1.0 || open_unit(&mut exchange_rng) < p {
                swapped[i] += 1;
                let (lo, hi) = slots.split_at_mut(i + 1);
                std::mem::swap(&mut lo[i].replica, &mut hi[0].replica);
            }
        }
        round += 1;
        recorder.improve(slots[0].replica.table.fixed_to_f64(global_best(&slots)));
        recorder.heartbeat();
    }

    let winner = slots
        .iter()
        .min_by_key(|s| s.replica.best_fixed)
        .expect("at least two replicas");
    let best_energy = winner.replica.table.fixed_to_f64(winner.replica.best_fixed);
    let best_config = winner.replica.best_config.clone();
    let accepted = slots.iter().map(|s| s.replica.accepted).sum();
    let elapsed = start.elapsed().as_secs_f64();
    let trace = super::trace::merge_traces([recorder.into_points()], best_energy, elapsed);
    Ok(RunResult {
        solver: cfg.name().to_string(),
        config_hash: cfg.config_hash(),
        best_energy,
        best_config,
        trace,
        attempted_flips: sweeps * (n * slots.len()) as u64,
        accepted_flips: accepted,
        elapsed_total: elapsed,
        diagnostics: Diagnostics {
            sweeps: Some(sweeps),
            exchange_acceptance: Some(
                tried
                    .iter()
                    .zip(&swapped)
                    .map(|(&t, &s)| if t == 0 { 0.0 } else { s as f64 / t as f64 })
                    .collect(),
            ),
            temperatures: Some(temps),
            ..Default::default()
        },
    })
}
