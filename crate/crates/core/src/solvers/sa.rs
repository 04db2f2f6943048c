use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schedule::{make_schedule, Interpolation, ScheduleParams};
use super::trace::{merge_traces, TracePoint, TraceRecorder};
use super::{metropolis_accept, reject_empty, Diagnostics, GlobalBest, RunResult, SolverConfig, SolverVariant};
use crate::error::{HuboError, Result};
use crate::model::{HuboInstance, SpinConfig, VariableIndexTable};
use crate::rng::{derive_seed, open_unit, stream};

const SCHEDULE_TAG: u64 = 0x5a5c;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaParams {
    /// Independent annealing runs from random starts.
    pub n_restarts: usize,
    /// Sweeps per restart; one sweep per schedule temperature.
    pub sweeps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_hot: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_cold: Option<f64>,
    #[serde(default)]
    pub interpolation: Interpolation,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            n_restarts: 1000,
            sweeps: 1000,
            t_hot: None,
            t_cold: None,
            interpolation: Interpolation::Geometric,
        }
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_restarts == 0 || self.sweeps == 0 {
            return Err(HuboError::Config("SA needs n_restarts >= 1 and sweeps >= 1".into()));
        }
        for t in [self.t_hot, self.t_cold].into_iter().flatten() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(HuboError::Config(format!("SA temperature must be positive, got {t}")));
            }
        }
        if let (Some(h), Some(c)) = (self.t_hot, self.t_cold) {
            if h <= c {
                return Err(HuboError::Config(format!("SA needs t_hot > t_cold (got {h} and {c})")));
            }
        }
        Ok(())
    }

    pub fn schedule_params(&self) -> ScheduleParams {
        ScheduleParams {
            t_hot: self.t_hot,
            t_cold: self.t_cold,
            interpolation: self.interpolation,
            n_steps: self.sweeps,
            ..Default::default()
        }
    }
}

struct Restart {
    best_energy: f64,
    best_config: SpinConfig,
    sweeps_done: u64,
    accepted: u64,
    completed: bool,
    trace: Vec<TracePoint>,
}

/// Simulated annealing with independent restarts.
///
/// Restart `r` draws from ChaCha stream `r + 1` of `seed`, so the outcome
/// of every restart is independent of the worker count. Sweeps visit the
/// variables in index order.
pub fn run_sa(instance: &HuboInstance, cfg: &SolverConfig, seed: u64) -> Result<RunResult> {
    reject_empty(instance)?;
    cfg.validate()?;
    let SolverVariant::Sa(params) = &cfg.variant else {
        return Err(HuboError::Config(format!("run_sa given a {} config", cfg.name())));
    };
    let start = Instant::now();
    let deadline = cfg.deadline(start);
    let schedule = make_schedule(instance, &params.schedule_params(), derive_seed(seed, SCHEDULE_TAG))?;
    let temps = schedule.temperatures();
    let n = instance.n_vars();
    let global = GlobalBest::default();
    let pool = cfg.pool()?;

    let restarts: Vec<Restart> = pool.install(|| {
        (0..params.n_restarts)
            .into_par_iter()
            .map(|r| {
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    return None;
                }
                let mut rng = stream(seed, r as u64 + 1);
                let mut config = SpinConfig::random(n, &mut rng);
                let mut table = VariableIndexTable::build_unchecked(instance, config.spins());
                let mut best_fixed = table.energy_fixed();
                let mut best_config = config.clone();
                let mut recorder = TraceRecorder::new(start);
                let mut accepted = 0u64;
                let mut sweeps_done = 0u64;
                let mut completed = true;
                if global.offer(table.energy()) {
                    recorder.improve(table.energy());
                }
                for &temp in &temps {
                    if deadline.is_some_and(|d| Instant::now() >= d) {
                        completed = false;
                        break;
                    }
                    let mut improved = false;
                    let spins = config.spins_mut();
                    for v in 0..n {
                        let delta = table.delta_unchecked(v);
                        let take = delta <= 0.0 || metropolis_accept(delta, temp, open_unit(&mut rng));
                        if take {
                            table.flip_unchecked(spins, v);
                            accepted += 1;
                            if table.energy_fixed() < best_fixed {
                                best_fixed = table.energy_fixed();
                                best_config.spins_mut().copy_from_slice(spins);
                                improved = true;
                            }
                        }
                    }
                    sweeps_done += 1;
                    if improved {
                        let e = table.fixed_to_f64(best_fixed);
                        if global.offer(e) {
                            recorder.improve(e);
                        }
                    }
                    recorder.heartbeat();
                }
                Some(Restart {
                    best_energy: table.fixed_to_f64(best_fixed),
                    best_config,
                    sweeps_done,
                    accepted,
                    completed,
                    trace: recorder.into_points(),
                })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });

    let Some(winner) = restarts.iter().min_by(|a, b| a.best_energy.total_cmp(&b.best_energy)) else {
        return Err(HuboError::Config("time limit expired before the first restart".into()));
    };
    let best_energy = winner.best_energy;
    let best_config = winner.best_config.clone();
    let sweeps: u64 = restarts.iter().map(|r| r.sweeps_done).sum();
    let accepted = restarts.iter().map(|r| r.accepted).sum();
    let completed = restarts.iter().filter(|r| r.completed).count() as u64;
    let elapsed = start.elapsed().as_secs_f64();
    let trace = merge_traces(restarts.into_iter().map(|r| r.trace), best_energy, elapsed);
    Ok(RunResult {
        solver: cfg.name().to_string(),
        config_hash: cfg.config_hash(),
        best_energy,
        best_config,
        trace,
        attempted_flips: sweeps * n as u64,
        accepted_flips: accepted,
        elapsed_total: elapsed,
        diagnostics: Diagnostics {
            restarts_completed: Some(completed),
            sweeps: Some(sweeps),
            temperatures: Some(vec![schedule.t_hot, schedule.t_cold]),
            ..Default::default()
        },
    })
}
