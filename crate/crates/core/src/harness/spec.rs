//! Declarative benchmark description (JSON, schema version 1).
//!
//! ```text
//! {
//!   "schema_version": 1,
//!   "seed": 7,
//!   "instances": {"kind": "family", "family": "3S", "count": 10, "seed": 42},
//!   "solvers": [
//!     {"id": "sa", "solver": {"solver": "SA", "n_restarts": 1000, "sweeps": 1000}},
//!     {"id": "hybrid", "pipeline": {"stages": [{"stage": "sa-warm-start", "params": {..}},
//!                                             {"stage": "identity"},
//!                                             {"stage": "greedy-refine"}],
//!                                  "budgets": [0.5, 0.1, 0.1]}}
//!   ],
//!   "trials": 10,
//!   "criterion": {"source": "best-of", "solver": "hybrid"}
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HuboError, Result};
use crate::instance_gen::{generate_family, random_instance, read_instance, Family};
use crate::metrics::{DEFAULT_EPSILON, DEFAULT_P_TARGET};
use crate::model::HuboInstance;
use crate::pipeline::{GreedyRefine, MtsRefine, SaWarmStart, Stage, SurrogateStage};
use crate::solvers::{MtsParams, SaParams, SolverConfig};

pub const SPEC_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSource {
    /// Instance files; relative paths resolve against the spec's directory.
    Paths {
        paths: Vec<PathBuf>,
    },
    Family {
        family: Family,
        count: usize,
        seed: u64,
    },
    /// Small unstructured instances, see [`random_instance`]; instance `k`
    /// uses seed `seed + k`.
    Random {
        n_vars: usize,
        count: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum CriterionSource {
    /// Exhaustive ground state of each instance.
    Oracle,
    /// Lowest energy any trial of the named solver reached.
    BestOf {
        solver: String,
    },
    Explicit {
        e_target: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "kebab-case")]
pub enum StageSpec {
    SaWarmStart {
        params: SaParams,
    },
    Identity,
    PerturbRestart {
        copies: usize,
        flip_probability: f64,
    },
    ExternalTrace {
        path: PathBuf,
    },
    GreedyRefine {
        #[serde(default = "default_starts")]
        max_starts: usize,
    },
    MtsRefine {
        params: MtsParams,
    },
}

fn default_starts() -> usize {
    GreedyRefine::default().max_starts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub stages: Vec<StageSpec>,
    /// Wall-clock seconds per stage.
    pub budgets: Vec<f64>,
}

impl PipelineSpec {
    pub fn build(&self, threads: usize, base_dir: &Path, n_vars: usize) -> Result<Vec<Box<dyn Stage>>> {
        self.stages
            .iter()
            .map(|s| -> Result<Box<dyn Stage>> {
                Ok(match s {
                    StageSpec::SaWarmStart { params } => Box::new(SaWarmStart {
                        params: *params,
                        threads,
                    }),
                    StageSpec::Identity => Box::new(SurrogateStage::Identity),
                    StageSpec::PerturbRestart {
                        copies,
                        flip_probability,
                    } => Box::new(SurrogateStage::PerturbRestart {
                        copies: *copies,
                        flip_probability: *flip_probability,
                    }),
                    StageSpec::ExternalTrace { path } => {
                        Box::new(SurrogateStage::external_from_file(&base_dir.join(path), n_vars)?)
                    }
                    StageSpec::GreedyRefine { max_starts } => Box::new(GreedyRefine {
                        max_starts: *max_starts,
                    }),
                    StageSpec::MtsRefine { params } => Box::new(MtsRefine {
                        params: *params,
                        threads,
                    }),
                })
            })
            .collect()
    }
}

/// A solver or a pipeline under a benchmark-wide id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub schema_version: u32,
    pub seed: u64,
    pub instances: InstanceSource,
    pub solvers: Vec<SolverEntry>,
    pub trials: u32,
    pub criterion: CriterionSource,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_p_target")]
    pub p_target: f64,
    /// Overrides the thread count of every solver when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Grid cells run concurrently.
    #[serde(default = "one")]
    pub cell_workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Directory relative paths resolve against; set by [`BenchmarkSpec::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_p_target() -> f64 {
    DEFAULT_P_TARGET
}

fn one() -> usize {
    1
}

impl BenchmarkSpec {
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let spec: BenchmarkSpec =
            serde_json::from_str(text).map_err(|e| HuboError::parse(context.to_string(), e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HuboError::io(path, e))?;
        let mut spec = Self::from_json(&text, &path.display().to_string())?;
        spec.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HuboError::Config(m));
        if self.schema_version != SPEC_SCHEMA_VERSION {
            return bad(format!("unsupported spec schema_version {}", self.schema_version));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.cell_workers == 0 {
            return bad("cell_workers must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return bad("no solvers configured".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.solvers {
            if s.id.is_empty() || !seen.insert(s.id.as_str()) {
                return bad(format!("solver ids must be nonempty and unique, got '{}'", s.id));
            }
            match (&s.solver, &s.pipeline) {
                (Some(cfg), None) => cfg.validate()?,
                (None, Some(p)) => {
                    if p.stages.is_empty() || p.stages.len() != p.budgets.len() {
                        return bad(format!("pipeline '{}' needs one budget per stage", s.id));
                    }
                }
                _ => return bad(format!("solver '{}' must set exactly one of solver or pipeline", s.id)),
            }
        }
        match &self.instances {
            InstanceSource::Paths { paths } if paths.is_empty() => return bad("no instance paths".into()),
            InstanceSource::Family { count: 0, .. } | InstanceSource::Random { count: 0, .. } => {
                return bad("instance count must be at least 1".into())
            }
            _ => {}
        }
        if let CriterionSource::BestOf { solver } = &self.criterion {
            if !self.solvers.iter().any(|s| &s.id == solver) {
                return bad(format!("criterion refers to unknown solver '{solver}'"));
            }
        }
        if let CriterionSource::Explicit { e_target } = self.criterion {
            if !e_target.is_finite() {
                return bad("explicit e_target must be finite".into());
            }
        }
        crate::metrics::SuccessCriterion {
            e_target: 0.0,
            epsilon: self.epsilon,
            p_target: self.p_target,
        }
        .validate()
    }

    /// `(id, instance)` pairs in benchmark order.
    pub fn load_instances(&self) -> Result<Vec<(String, HuboInstance)>> {
        match &self.instances {
            InstanceSource::Paths { paths } => paths
                .iter()
                .map(|p| {
                    let full = self.base_dir.join(p);
                    let id = full
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| full.display().to_string());
                    Ok((id, read_instance(&full)?))
                })
                .collect(),
            InstanceSource::Family { family, count, seed } => Ok(generate_family(*family, *count, *seed)?
                .into_iter()
                .enumerate()
                .map(|(k, h)| (instance_file_stem(family.label(), k), h))
                .collect()),
            InstanceSource::Random { n_vars, count, seed } => (0..*count)
                .map(|k| {
                    let h = random_instance(*n_vars, seed.wrapping_add(k as u64))?;
                    Ok((instance_file_stem(&format!("random{n_vars}"), k), h))
                })
                .collect(),
        }
    }

    /// Effective configuration of one entry with the thread override applied.
    pub fn effective_config(&self, entry: &SolverEntry) -> serde_json::Value {
        let mut e = entry.clone();
        if let (Some(t), Some(cfg)) = (self.threads, e.solver.as_mut()) {
            cfg.threads = t;
        }
        let mut v = serde_json::to_value(&e).expect("entry serializes");
        if let (Some(t), Some(_)) = (self.threads, &e.pipeline) {
            v["threads"] = serde_json::json!(t);
        }
        v
    }
}

/// `3S-000`, `3S-001`, ...
pub fn instance_file_stem(label: &str, k: usize) -> String {
    format!("{label}-{k:03}")
}
