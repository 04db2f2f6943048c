//! Cauchy coupling sampling and the 3S/4S instance families.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::lattice::{HeavyHexGraph, LatticeSize};
use super::schedule::{densify, PathCenters, ScheduleRecipe, SliceSchedule, SupportSet};
use crate::error::{HuboError, Result};
use crate::model::{HuboInstance, InstanceMetadata};
use crate::rng::{self, open_unit, HuboRng};

/// Name recorded in instance provenance for the committed default schedule.
pub const DEFAULT_SCHEDULE_NAME: &str = "heavy-hex-default-v1";

/// The committed default schedule recipe. On the 156-node lattice it yields
/// 1128 supports after three SWAP layers and 1323 after four.
pub fn default_recipe() -> ScheduleRecipe {
    ScheduleRecipe {
        path_centers: PathCenters::Any,
        local_fields: true,
        rounds: vec![(3, 2), (3, 2), (3, 3), (3, 6), (3, 5)],
        swap_classes: vec![1, 0],
    }
}

pub fn default_schedule(graph: &HeavyHexGraph) -> Result<SliceSchedule> {
    default_recipe().build(graph, DEFAULT_SCHEDULE_NAME)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingDistribution {
    /// Location 0, scale 1.
    #[default]
    StandardCauchy,
}

impl CouplingDistribution {
    pub fn sample(self, rng: &mut HuboRng) -> f64 {
        match self {
            CouplingDistribution::StandardCauchy => standard_cauchy(rng),
        }
    }
}

/// Inverse-CDF draw `tan(pi * (u - 1/2))`, `u` uniform on the open unit interval.
pub fn standard_cauchy(rng: &mut HuboRng) -> f64 {
    (std::f64::consts::PI * (open_unit(rng) - 0.5)).tan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "3S")]
    ThreeS,
    #[serde(rename = "4S")]
    FourS,
}

impl Family {
    pub fn n_swap_layers(self) -> u32 {
        match self {
            Family::ThreeS => 3,
            Family::FourS => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::ThreeS => "3S",
            Family::FourS => "4S",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Family {
    type Err = HuboError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "3S" => Ok(Family::ThreeS),
            "4S" => Ok(Family::FourS),
            other => Err(HuboError::Config(format!(
                "unknown family '{other}' (expected 3S or 4S)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub n_swap_layers: u32,
    pub seed: u64,
    #[serde(default)]
    pub distribution: CouplingDistribution,
    #[serde(default)]
    pub lattice: LatticeSize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
}

impl GenerationConfig {
    pub fn for_family(family: Family, seed: u64) -> Self {
        GenerationConfig {
            n_swap_layers: family.n_swap_layers(),
            seed,
            distribution: CouplingDistribution::StandardCauchy,
            lattice: LatticeSize::Heron156,
            family: Some(family),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_swap_layers < 1 {
            return Err(HuboError::Config("n_swap_layers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws one coupling per support, in canonical support order, from a
/// generator seeded with `seed`.
pub fn sample_couplings(
    n_vars: usize,
    supports: &SupportSet,
    distribution: CouplingDistribution,
    seed: u64,
) -> Result<HuboInstance> {
    let mut rng = rng::seeded(seed);
    let terms = supports.iter().map(|s| {
        let vars: Vec<usize> = s.vars().iter().map(|&v| v as usize).collect();
        (vars, distribution.sample(&mut rng))
    });
    let terms: Vec<_> = terms.collect();
    HuboInstance::new(n_vars, terms, InstanceMetadata::default())
}

/// Generates one instance with the default schedule on the configured lattice.
pub fn generate_instance(cfg: &GenerationConfig) -> Result<HuboInstance> {
    cfg.validate()?;
    let graph = HeavyHexGraph::build(cfg.lattice);
    let schedule = default_schedule(&graph)?;
    generate_with_schedule(&graph, &schedule, cfg)
}

pub fn generate_with_schedule(
    graph: &HeavyHexGraph,
    schedule: &SliceSchedule,
    cfg: &GenerationConfig,
) -> Result<HuboInstance> {
    let supports = densify(graph, schedule, cfg.n_swap_layers as usize)?;
    let instance = sample_couplings(graph.n_nodes(), &supports, cfg.distribution, cfg.seed)?;
    Ok(instance.with_metadata(InstanceMetadata {
        family: cfg.family.map(|f| f.label().to_string()),
        seed: Some(cfg.seed),
        n_swap_layers: Some(cfg.n_swap_layers),
        provenance: format!(
            "lattice={} schedule={} distribution={} rng={}",
            cfg.lattice,
            schedule.name,
            match cfg.distribution {
                CouplingDistribution::StandardCauchy => "standard-cauchy",
            },
            rng::RNG_NAME
        ),
    }))
}

/// Seed of instance `k` in a family: `base_seed XOR k`.
pub fn family_seed(base_seed: u64, k: u64) -> u64 {
    base_seed ^ k
}

/// `count` instances of a family; instance `k` uses [`family_seed`].
pub fn generate_family(family: Family, count: usize, base_seed: u64) -> Result<Vec<HuboInstance>> {
    if count == 0 {
        return Err(HuboError::Config("family count must be at least 1".into()));
    }
    let graph = HeavyHexGraph::build(LatticeSize::Heron156);
    let schedule = default_schedule(&graph)?;
    (0..count as u64)
        .map(|k| {
            let cfg = GenerationConfig::for_family(family, family_seed(base_seed, k));
            generate_with_schedule(&graph, &schedule, &cfg)
        })
        .collect()
}

/// Small unstructured instance for exhaustive cross-checks: a field on
/// each variable with probability 1/2, then `2 n` random pairs and `2 n`
/// random triples (duplicates merged), all with standard Cauchy couplings.
pub fn random_instance(n_vars: usize, seed: u64) -> Result<HuboInstance> {
    if n_vars < 3 {
        return Err(HuboError::Config(format!(
            "random instances need at least 3 variables, got {n_vars}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut terms: Vec<(Vec<usize>, f64)> = Vec::new();
    for v in 0..n_vars {
        if open_unit(&mut rng) < 0.5 {
            terms.push((vec![v], standard_cauchy(&mut rng)));
        }
    }
    for arity in [2usize, 3] {
        for _ in 0..2 * n_vars {
            let mut vars: Vec<usize> = Vec::with_capacity(arity);
            while vars.len() < arity {
                let v = (open_unit(&mut rng) * n_vars as f64) as usize;
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            terms.push((vars, standard_cauchy(&mut rng)));
        }
    }
    let instance = HuboInstance::new(n_vars, terms, InstanceMetadata::default())?;
    Ok(instance.with_metadata(InstanceMetadata {
        family: Some(format!("random-{n_vars}")),
        seed: Some(seed),
        n_swap_layers: None,
        provenance: format!("distribution=standard-cauchy rng={}", rng::RNG_NAME),
    }))
}
