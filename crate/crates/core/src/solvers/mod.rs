//! Classical baselines: simulated annealing with restarts, parallel
//! tempering, memetic tabu search and greedy descent.
//!
//! Every solver returns a [`RunResult`] with a time-stamped best-so-far
//! trace and exact flip counters. Randomness is drawn from per-worker
//! ChaCha streams of one seed, so a run's energies, configurations and
//! counters depend only on (instance, config, seed), never on scheduling.

mod greedy;
mod local;
mod mts;
mod pt;
mod sa;
mod schedule;
mod trace;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use greedy::{greedy_descent, run_greedy};
pub use local::DeltaCache;
pub use mts::{run_mts, run_mts_from_population, tabu_admissible, tabu_search, MtsParams, TabuOutcome};
pub use pt::{exchange_probability, run_pt, PtParams};
pub use sa::{run_sa, SaParams};
pub use schedule::{
    make_schedule, percentile_nearest_rank, sample_flip_deltas, Interpolation, ScheduleParams, TemperatureSchedule,
};
pub use trace::{merge_traces, TracePoint, TraceRecorder, HEARTBEAT};

use crate::error::{HuboError, Result};
use crate::model::{evaluate_energy, HuboInstance, SpinConfig};

/// Which algorithm to run, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver")]
pub enum SolverVariant {
    #[serde(rename = "SA")]
    Sa(SaParams),
    #[serde(rename = "PT")]
    Pt(PtParams),
    #[serde(rename = "MTS")]
    Mts(MtsParams),
    #[serde(rename = "GREEDY")]
    Greedy,
}

impl SolverVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SolverVariant::Sa(_) => "SA",
            SolverVariant::Pt(_) => "PT",
            SolverVariant::Mts(_) => "MTS",
            SolverVariant::Greedy => "GREEDY",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(flatten)]
    pub variant: SolverVariant,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    /// Wall-clock limit in seconds, checked between sweeps or generations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<f64>,
}

impl SolverConfig {
    pub fn new(variant: SolverVariant) -> Self {
        SolverConfig {
            variant,
            threads: 1,
            time_limit: None,
        }
    }

    pub fn sa(params: SaParams) -> Self {
        Self::new(SolverVariant::Sa(params))
    }

    pub fn pt(params: PtParams) -> Self {
        Self::new(SolverVariant::Pt(params))
    }

    pub fn mts(params: MtsParams) -> Self {
        Self::new(SolverVariant::Mts(params))
    }

    pub fn greedy() -> Self {
        Self::new(SolverVariant::Greedy)
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.time_limit = Some(seconds);
        self
    }

    pub fn name(&self) -> &'static str {
        self.variant.name()
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.time_limit {
            if !(t > 0.0 && t.is_finite()) {
                return Err(HuboError::Config(format!("time_limit must be positive, got {t}")));
            }
        }
        match &self.variant {
            SolverVariant::Sa(p) => p.validate(),
            SolverVariant::Pt(p) => p.validate(self.time_limit),
            SolverVariant::Mts(p) => p.validate(),
            SolverVariant::Greedy => Ok(()),
        }
    }

    pub(crate) fn deadline(&self, start: Instant) -> Option<Instant> {
        self.time_limit.map(|t| start + Duration::from_secs_f64(t))
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| HuboError::Config(format!("cannot start worker pool: {e}")))
    }
}

/// Solver-specific counters that do not fit the common fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts_completed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<u64>,
    /// Replica-exchange acceptance rate of each adjacent temperature pair,
    /// coldest pair first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exchange_acceptance: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperatures: Option<Vec<f64>>,
}

/// One solver execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub solver: String,
    pub config_hash: String,
    pub best_energy: f64,
    pub best_config: SpinConfig,
    pub trace: Vec<TracePoint>,
    pub attempted_flips: u64,
    pub accepted_flips: u64,
    /// Seconds.
    pub elapsed_total: f64,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

impl RunResult {
    /// Checks the trace and energy invariants against the instance.
    pub fn check_consistency(&self, instance: &HuboInstance) -> Result<()> {
        let fail = |m: String| Err(HuboError::Invalid(format!("{} result: {m}", self.solver)));
        if self.trace.is_empty() {
            return fail("empty trace".into());
        }
        for w in self.trace.windows(2) {
            if w[1].t <= w[0].t {
                return fail(format!("trace times not increasing at {}", w[1].t));
            }
            if w[1].energy > w[0].energy {
                return fail(format!("trace energy increases at {}", w[1].t));
            }
        }
        if self.trace.last().unwrap().energy != self.best_energy {
            return fail("last trace energy differs from best_energy".into());
        }
        let e = evaluate_energy(instance, &self.best_config)?;
        let tol = 1e-9 * instance.coefficient_scale().max(1.0);
        if (e - self.best_energy).abs() > tol {
            return fail(format!(
                "best_energy {} but configuration evaluates to {e}",
                self.best_energy
            ));
        }
        if self.accepted_flips > self.attempted_flips {
            return fail("accepted flips exceed attempted flips".into());
        }
        Ok(())
    }

    /// The same run with timing stripped, for determinism comparisons.
    pub fn without_timing(&self) -> RunResult {
        RunResult {
            trace: Vec::new(),
            elapsed_total: 0.0,
            ..self.clone()
        }
    }
}

/// Dispatches on the configured variant.
pub fn run_solver(instance: &HuboInstance, cfg: &SolverConfig, seed: u64) -> Result<RunResult> {
    match &cfg.variant {
        SolverVariant::Sa(_) => run_sa(instance, cfg, seed),
        SolverVariant::Pt(_) => run_pt(instance, cfg, seed),
        SolverVariant::Mts(_) => run_mts(instance, cfg, seed),
        SolverVariant::Greedy => run_greedy(instance, cfg, seed),
    }
}

/// Metropolis rule: downhill or level moves always pass; uphill moves pass
/// when `u < exp(-delta / temperature)`.
#[inline]
pub fn metropolis_accept(delta: f64, temperature: f64, u: f64) -> bool {
    delta <= 0.0 || u < (-delta / temperature).exp()
}

/// Monotonic shared best energy, updated with compare-and-swap.
#[derive(Debug)]
pub struct GlobalBest {
    bits: AtomicU64,
}

impl Default for GlobalBest {
    fn default() -> Self {
        GlobalBest {
            bits: AtomicU64::new(f64::INFINITY.to_bits()),
        }
    }
}

impl GlobalBest {
    pub fn get(&self) -> f64 {
        f64::from_bits(self.bits.load(Ordering::Acquire))
    }

    /// Lowers the cell to `energy` if it improves on it; returns whether it did.
    pub fn offer(&self, energy: f64) -> bool {
        let mut current = self.bits.load(Ordering::Acquire);
        loop {
            if energy >= f64::from_bits(current) {
                return false;
            }
            match self
                .bits
                .compare_exchange_weak(current, energy.to_bits(), Ordering::AcqRel, Ordering::Acquire)
            {
                Ok(_) => return true,
                Err(seen) => current = seen,
            }
        }
    }
}

pub(crate) fn reject_empty(instance: &HuboInstance) -> Result<()> {
    if instance.n_vars() == 0 {
        return Err(HuboError::Invalid("instance has no variables".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metropolis_rule() {
        assert!(metropolis_accept(-1.0, 0.5, 0.999_999));
        assert!(metropolis_accept(0.0, 0.5, 0.999_999));
        let p = (-2.0f64 / 0.5).exp();
        assert!(metropolis_accept(2.0, 0.5, p * 0.999));
        assert!(!metropolis_accept(2.0, 0.5, p * 1.001));
    }

    #[test]
    fn global_best_is_monotonic() {
        let g = GlobalBest::default();
        assert!(g.offer(3.0));
        assert!(!g.offer(4.0));
        assert!(g.offer(-1.0));
        assert!(!g.offer(-1.0));
        assert_eq!(g.get(), -1.0);
    }

    #[test]
    fn global_best_under_contention() {
        let g = GlobalBest::default();
        std::thread::scope(|s| {
            for w in 0..4 {
                let g = &g;
                s.spawn(move || {
                    for k in 0..1000 {
                        g.offer(-((k * 4 + w) as f64));
                    }
                });
            }
        });
        assert_eq!(g.get(), -3999.0);
    }

    #[test]
    fn config_round_trip_and_hash() {
        let cfg = SolverConfig::sa(SaParams::default()).with_threads(2);
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"solver\":\"SA\""), "{json}");
        let back: SolverConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.config_hash(), cfg.config_hash());
        assert_ne!(cfg.config_hash(), SolverConfig::greedy().config_hash());
        let g: SolverConfig = serde_json::from_str(r#"{"solver":"GREEDY"}"#).unwrap();
        assert_eq!(g.variant, SolverVariant::Greedy);
    }
}
