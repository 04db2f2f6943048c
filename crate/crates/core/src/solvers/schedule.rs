use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{HuboError, Result};
use crate::model::{HuboInstance, SpinConfig, VariableIndexTable};
use crate::rng::HuboRng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    Geometric,
    Linear,
}

/// Annealing temperatures from `t_hot` down to `t_cold` in `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSchedule {
    pub t_hot: f64,
    pub t_cold: f64,
    #[serde(default)]
    pub interpolation: Interpolation,
    pub n_steps: usize,
}

impl TemperatureSchedule {
    pub fn new(t_hot: f64, t_cold: f64, interpolation: Interpolation, n_steps: usize) -> Result<Self> {
        let s = TemperatureSchedule {
            t_hot,
            t_cold,
            interpolation,
            n_steps,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_cold > 0.0 && self.t_hot > self.t_cold && self.t_hot.is_finite()) {
            return Err(HuboError::Config(format!(
                "temperatures must satisfy t_hot > t_cold > 0 (got {} and {})",
                self.t_hot, self.t_cold
            )));
        }
        if self.n_steps == 0 {
            return Err(HuboError::Config("schedule needs at least one step".into()));
        }
        Ok(())
    }

    /// Temperature of step `k`; a single-step schedule sits at `t_cold`.
    pub fn temperature(&self, k: usize) -> f64 {
        if self.n_steps == 1 {
            return self.t_cold;
        }
        let frac = k as f64 / (self.n_steps - 1) as f64;
        match self.interpolation {
            Interpolation::Geometric => self.t_hot * (self.t_cold / self.t_hot).powf(frac),
            Interpolation::Linear => self.t_hot + (self.t_cold - self.t_hot) * frac,
        }
    }

    pub fn temperatures(&self) -> Vec<f64> {
        (0..self.n_steps).map(|k| self.temperature(k)).collect()
    }
}

/// Inputs to [`make_schedule`]. Unset endpoints are derived from sampled
/// single-flip energy changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_hot: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_cold: Option<f64>,
    #[serde(default)]
    pub interpolation: Interpolation,
    pub n_steps: usize,
    /// Random configurations sampled for the delta statistics.
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

fn default_samples() -> usize {
    32
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            t_hot: None,
            t_cold: None,
            interpolation: Interpolation::Geometric,
            n_steps: 1000,
            n_samples: default_samples(),
        }
    }
}

/// Percentile of |dE| whose uphill move is accepted with probability 1/2 at `t_hot`.
pub const HOT_PERCENTILE: f64 = 0.9;
/// Percentile of |dE| whose uphill move is accepted with probability 1/100 at `t_cold`.
pub const COLD_PERCENTILE: f64 = 0.1;

/// Nonzero |single-flip dE| over every variable of `n_samples` random
/// configurations drawn from `seed`.
pub fn sample_flip_deltas(instance: &HuboInstance, n_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = HuboRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_samples * instance.n_vars());
    for _ in 0..n_samples {
        let config = SpinConfig::random(instance.n_vars(), &mut rng);
        let table = VariableIndexTable::build_unchecked(instance, config.spins());
        for v in 0..instance.n_vars() {
            let d = table.delta_unchecked(v).abs();
            if d > 0.0 {
                out.push(d);
            }
        }
    }
    out
}

/// Nearest-rank percentile: the smallest sample with at least a fraction
/// `p` of the samples at or below it.
pub fn percentile_nearest_rank(samples: &[f64], p: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

/// Robust default endpoints: `t_hot = q90 / ln 2` and `t_cold = q10 / ln 100`
/// over sampled |dE|. Percentiles rather than extremes, because Cauchy
/// couplings put a few enormous deltas in every instance.
pub fn make_schedule(instance: &HuboInstance, params: &ScheduleParams, seed: u64) -> Result<TemperatureSchedule> {
    if instance.n_vars() == 0 {
        return Err(HuboError::Invalid("instance has no variables".into()));
    }
    let (t_hot, t_cold) = match (params.t_hot, params.t_cold) {
        (Some(h), Some(c)) => (h, c),
        (hot, cold) => {
            let samples = sample_flip_deltas(instance, params.n_samples.max(1), seed);
            let (q_hi, q_lo) = match (
                percentile_nearest_rank(&samples, HOT_PERCENTILE),
                percentile_nearest_rank(&samples, COLD_PERCENTILE),
            ) {
                (Some(hi), Some(lo)) => (hi, lo),
                // no term can change the energy: any positive pair works
                _ => (1.0, 1.0),
            };
            (
                hot.unwrap_or(q_hi / std::f64::consts::LN_2),
                cold.unwrap_or(q_lo / 100f64.ln()),
            )
        }
    };
    TemperatureSchedule::new(t_hot, t_cold, params.interpolation, params.n_steps)
}
