//! Success probability, time-to-solution, closeness-to-target curves,
//! geometric means, speedups and flip throughput.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HuboError, Result};
use crate::solvers::{RunResult, TracePoint};

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_P_TARGET: f64 = 0.99;

/// A run succeeds when its best energy is at most `e_target + epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriterion {
    pub e_target: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_p_target")]
    pub p_target: f64,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_p_target() -> f64 {
    DEFAULT_P_TARGET
}

impl SuccessCriterion {
    pub fn new(e_target: f64) -> Self {
        SuccessCriterion {
            e_target,
            epsilon: DEFAULT_EPSILON,
            p_target: DEFAULT_P_TARGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.e_target.is_finite() {
            return Err(HuboError::Config(format!(
                "e_target must be finite, got {}",
                self.e_target
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(HuboError::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        check_p_target(self.p_target)
    }

    #[inline]
    pub fn is_hit(&self, energy: f64) -> bool {
        energy <= self.e_target + self.epsilon
    }
}

fn check_p_target(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(HuboError::Config(format!("p_target must lie in (0, 1), got {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitCounts {
    pub n_runs: usize,
    pub n_hits: usize,
}

impl HitCounts {
    pub fn p_hit(&self) -> f64 {
        self.n_hits as f64 / self.n_runs as f64
    }
}

/// Fraction of runs meeting the criterion.
pub fn estimate_p_hit(results: &[RunResult], criterion: &SuccessCriterion) -> Result<(f64, HitCounts)> {
    p_hit_from_energies(results.iter().map(|r| r.best_energy), criterion)
}

pub fn p_hit_from_energies(
    energies: impl IntoIterator<Item = f64>,
    criterion: &SuccessCriterion,
) -> Result<(f64, HitCounts)> {
    criterion.validate()?;
    let mut counts = HitCounts { n_runs: 0, n_hits: 0 };
    for e in energies {
        counts.n_runs += 1;
        if criterion.is_hit(e) {
            counts.n_hits += 1;
        }
    }
    if counts.n_runs == 0 {
        return Err(HuboError::Invalid("no results to estimate p_hit from".into()));
    }
    Ok((counts.p_hit(), counts))
}

/// A duration that may be infinite. Serialized as a number or the string
/// `"inf"`, since JSON has no infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tts {
    Finite(f64),
    Infinite,
}

impl Tts {
    pub fn from_f64(x: f64) -> Self {
        if x.is_finite() {
            Tts::Finite(x)
        } else {
            Tts::Infinite
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Tts::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Tts::Finite(x) => Some(x),
            Tts::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the infinite case.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Tts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tts::Finite(x) => write!(f, "{x}"),
            Tts::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Tts {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Tts::Finite(x) => s.serialize_f64(*x),
            Tts::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Tts {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Tts::Finite(x)),
            Raw::Str(s) if s == "inf" => Ok(Tts::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtsResult {
    pub t_run: f64,
    pub p_hit: f64,
    pub p_target: f64,
    pub tts: Tts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<HitCounts>,
}

/// `t_run * ln(1 - p_target) / ln(1 - p_hit)`; infinite when `p_hit = 0`
/// and `t_run` when `p_hit = 1`.
pub fn compute_tts(t_run: f64, p_hit: f64, p_target: f64) -> Result<TtsResult> {
    if !(t_run > 0.0 && t_run.is_finite()) {
        return Err(HuboError::Invalid(format!("t_run must be positive, got {t_run}")));
    }
    if !(0.0..=1.0).contains(&p_hit) {
        return Err(HuboError::Invalid(format!("p_hit must lie in [0, 1], got {p_hit}")));
    }
    check_p_target(p_target)?;
    let tts = if p_hit == 0.0 {
        Tts::Infinite
    } else if p_hit == 1.0 || p_hit == p_target {
        Tts::Finite(t_run)
    } else {
        Tts::Finite(t_run * (1.0 - p_target).ln() / (1.0 - p_hit).ln())
    };
    Ok(TtsResult {
        t_run,
        p_hit,
        p_target,
        tts,
        counts: None,
    })
}

/// TTS of a set of runs, with `t_run` their mean elapsed time.
pub fn tts_of_runs(results: &[RunResult], criterion: &SuccessCriterion) -> Result<TtsResult> {
    let (p, counts) = estimate_p_hit(results, criterion)?;
    let t_run = results.iter().map(|r| r.elapsed_total).sum::<f64>() / results.len() as f64;
    let mut out = compute_tts(t_run, p, criterion.p_target)?;
    out.counts = Some(counts);
    Ok(out)
}

/// Geometric mean over the finite entries, with the number of infinite
/// entries left out. `value` is `None` when every entry is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricMean {
    pub value: Option<f64>,
    pub excluded: usize,
}

pub fn geometric_mean_tts(values: &[Tts]) -> Result<GeometricMean> {
    if values.is_empty() {
        return Err(HuboError::Invalid("geometric mean of no values".into()));
    }
    let finite: Vec<f64> = values.iter().filter_map(Tts::finite).collect();
    if let Some(bad) = finite.iter().find(|&&x| x <= 0.0) {
        return Err(HuboError::Invalid(format!("TTS values must be positive, got {bad}")));
    }
    let excluded = values.len() - finite.len();
    let value = if finite.is_empty() {
        None
    } else if finite.len() == 1 {
        // exp(ln x) need not round-trip
        Some(finite[0])
    } else {
        Some((finite.iter().map(|x| x.ln()).sum::<f64>() / finite.len() as f64).exp())
    };
    Ok(GeometricMean { value, excluded })
}

/// Attempted flips per second.
pub fn throughput(result: &RunResult) -> Result<f64> {
    flips_per_second(result.attempted_flips, result.elapsed_total)
}

pub fn flips_per_second(flips: u64, seconds: f64) -> Result<f64> {
    if seconds.is_nan() || seconds <= 0.0 {
        return Err(HuboError::Invalid(format!(
            "elapsed time must be positive, got {seconds}"
        )));
    }
    Ok(flips as f64 / seconds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ratio {
    Finite(f64),
    Infinite,
    /// Both sides infinite.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub instance: String,
    pub tts_a: Tts,
    pub tts_b: Tts,
    /// `tts_b / tts_a`.
    pub ratio: Ratio,
    pub a_wins: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupTable {
    pub rows: Vec<SpeedupRow>,
    pub wins_a: usize,
    pub wins_b: usize,
}

/// Per-instance `b / a` ratios. A side wins with the strictly smaller TTS;
/// an infinite TTS loses to any finite one.
pub fn speedup_table(a: &BTreeMap<String, Tts>, b: &BTreeMap<String, Tts>) -> Result<SpeedupTable> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        let only_a: Vec<_> = a.keys().filter(|k| !b.contains_key(*k)).collect();
        let only_b: Vec<_> = b.keys().filter(|k| !a.contains_key(*k)).collect();
        return Err(HuboError::Invalid(format!(
            "instance keys differ: only in a {only_a:?}, only in b {only_b:?}"
        )));
    }
    let mut rows = Vec::with_capacity(a.len());
    let (mut wins_a, mut wins_b) = (0, 0);
    for ((key, &ta), &tb) in a.iter().zip(b.values()) {
        let ratio = match (ta, tb) {
            (Tts::Finite(x), Tts::Finite(y)) => Ratio::Finite(y / x),
            (Tts::Finite(_), Tts::Infinite) => Ratio::Infinite,
            (Tts::Infinite, Tts::Finite(_)) => Ratio::Finite(0.0),
            (Tts::Infinite, Tts::Infinite) => Ratio::Undefined,
        };
        let a_wins = ta.as_f64() < tb.as_f64();
        if a_wins {
            wins_a += 1;
        } else if tb.as_f64() < ta.as_f64() {
            wins_b += 1;
        }
        rows.push(SpeedupRow {
            instance: key.clone(),
            tts_a: ta,
            tts_b: tb,
            ratio,
            a_wins,
        });
    }
    Ok(SpeedupTable { rows, wins_a, wins_b })
}

/// The traces of all runs on one instance, and its target energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTraces {
    pub instance_id: String,
    pub e_target: f64,
    pub traces: Vec<Vec<TracePoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessCurve {
    pub grid: Vec<f64>,
    pub instance_ids: Vec<String>,
    /// `per_instance[i][k]` is C at `grid[k]` for instance `i`; `None`
    /// before that instance's first trace sample.
    pub per_instance: Vec<Vec<Option<f64>>>,
    /// Mean and population standard deviation across instances; `None`
    /// where any instance is still undefined.
    pub mean: Vec<Option<f64>>,
    pub sigma: Vec<Option<f64>>,
}

/// Best-so-far value of one trace at time `t`: the last sample at or
/// before `t`, never a later one.
pub fn value_at(trace: &[TracePoint], t: f64) -> Option<f64> {
    let k = trace.partition_point(|p| p.t <= t);
    k.checked_sub(1).map(|i| trace[i].energy)
}

/// C(t) = E_best(t) / E_target per instance on `grid`, where E_best is the
/// minimum over that instance's traces carried forward from each sample.
pub fn closeness_curve(groups: &[InstanceTraces], grid: &[f64]) -> Result<ClosenessCurve> {
    if groups.is_empty() {
        return Err(HuboError::Invalid("closeness curve needs at least one instance".into()));
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HuboError::Invalid(
            "time grid must be nonempty and strictly increasing".into(),
        ));
    }
    let mut per_instance = Vec::with_capacity(groups.len());
    for g in groups {
        if g.traces.is_empty() || g.traces.iter().all(|t| t.is_empty()) {
            return Err(HuboError::Invalid(format!(
                "instance {} has no trace samples",
                g.instance_id
            )));
        }
        if g.e_target.is_nan() || g.e_target >= 0.0 {
            return Err(HuboError::Invalid(format!(
                "instance {}: closeness ratio needs a negative target energy, got {}; \
                 use the energy gap E_best - E_target for non-negative targets",
                g.instance_id, g.e_target
            )));
        }
        let row = grid
            .iter()
            .map(|&t| {
                g.traces
                    .iter()
                    .filter_map(|tr| value_at(tr, t))
                    .min_by(f64::total_cmp)
                    .map(|e| e / g.e_target)
            })
            .collect();
        per_instance.push(row);
    }
    let mut mean = Vec::with_capacity(grid.len());
    let mut sigma = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let column: Option<Vec<f64>> = per_instance.iter().map(|row: &Vec<Option<f64>>| row[k]).collect();
        match column {
            Some(xs) => {
                let m = xs.iter().sum::<f64>() / xs.len() as f64;
                let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
                mean.push(Some(m));
                sigma.push(Some(var.sqrt()));
            }
            None => {
                mean.push(None);
                sigma.push(None);
            }
        }
    }
    Ok(ClosenessCurve {
        grid: grid.to_vec(),
        instance_ids: groups.iter().map(|g| g.instance_id.clone()).collect(),
        per_instance,
        mean,
        sigma,
    })
}

/// `n` evenly spaced times spanning the earliest to the latest trace sample.
pub fn default_grid(groups: &[InstanceTraces], n: usize) -> Result<Vec<f64>> {
    let times = groups.iter().flat_map(|g| g.traces.iter().flatten().map(|p| p.t));
    let (lo, hi) = times.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
    if !lo.is_finite() {
        return Err(HuboError::Invalid("no trace samples to span".into()));
    }
    if n < 2 || hi <= lo {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|k| lo + step * k as f64).collect();
    grid[n - 1] = hi;
    Ok(grid)
}
