//! The (instance x solver x trial) grid runner.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::record::{
    read_records, unix_now, ArtifactVersions, Payload, Provenance, ResultLog, ResultRecord, RECORD_SCHEMA_VERSION,
    RESULTS_FILE,
};
use super::report::{compute_summary, CriterionFile, Target, CRITERION_FILE, SUMMARY_FILE};
use super::spec::{BenchmarkSpec, CriterionSource, SolverEntry};
use super::{instance_sha256, write_json};
use crate::error::{HuboError, Result};
use crate::model::HuboInstance;
use crate::oracle::brute_force_ground_state;
use crate::pipeline::run_pipeline;
use crate::solvers::run_solver;

pub const SPEC_ECHO_FILE: &str = "spec.json";

/// Seed of one grid cell: the first 8 bytes of
/// SHA-256(`"{seed}/{instance}/{solver}/{trial}"`).
pub fn cell_seed(seed: u64, instance_id: &str, solver_id: &str, trial: u32) -> u64 {
    let d = Sha256::digest(format!("{seed}/{instance_id}/{solver_id}/{trial}").as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub out_dir: PathBuf,
    pub total_cells: usize,
    pub ran: usize,
    /// Cells already present in the log.
    pub skipped: usize,
}

impl BenchOutcome {
    /// Every cell was logged before this invocation.
    pub fn was_complete(&self) -> bool {
        self.ran == 0
    }
}

struct Cell<'a> {
    instance_id: &'a str,
    instance: &'a HuboInstance,
    sha: &'a str,
    entry: &'a SolverEntry,
    trial: u32,
}

fn run_cell(spec: &BenchmarkSpec, cell: &Cell<'_>) -> Result<ResultRecord> {
    let seed = cell_seed(spec.seed, cell.instance_id, &cell.entry.id, cell.trial);
    let config = spec.effective_config(cell.entry);
    let threads = spec.threads;
    let started_at = unix_now();
    let bracket = Instant::now();
    let payload = match (&cell.entry.solver, &cell.entry.pipeline) {
        (Some(cfg), _) => {
            let mut cfg = cfg.clone();
            if let Some(t) = threads {
                cfg.threads = t;
            }
            Payload::Run(run_solver(cell.instance, &cfg, seed)?)
        }
        (None, Some(p)) => {
            let stages = p.build(threads.unwrap_or(1), &spec.base_dir, cell.instance.n_vars())?;
            Payload::Pipeline(run_pipeline(cell.instance, &stages, seed, &p.budgets)?)
        }
        (None, None) => unreachable!("validated"),
    };
    let wall = bracket.elapsed().as_secs_f64();
    let finished_at = unix_now();
    Ok(ResultRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        instance_id: cell.instance_id.to_string(),
        instance_family: cell.instance.metadata().family.clone(),
        instance_sha256: Some(cell.sha.to_string()),
        solver_id: cell.entry.id.clone(),
        trial: cell.trial,
        seed,
        config,
        provenance: Provenance::Native,
        flagged: false,
        note: None,
        started_at,
        finished_at,
        overhead_seconds: (wall - payload.solver_seconds()).max(0.0),
        versions: ArtifactVersions::current(),
        payload,
    })
}

/// Runs every missing cell of `spec`, appending records to
/// `<out_dir>/results.ndjson`, then rewrites the derived criterion and
/// summary files.
pub fn cmd_bench(spec: &BenchmarkSpec, out_dir: &Path) -> Result<BenchOutcome> {
    spec.validate()?;
    let instances = spec.load_instances()?;
    let shas: Vec<String> = instances.iter().map(|(_, h)| instance_sha256(h)).collect();
    let log_path = out_dir.join(RESULTS_FILE);
    let existing = read_records(&log_path)?;
    let done: BTreeSet<_> = existing.iter().map(ResultRecord::key).collect();
    write_json(&out_dir.join(SPEC_ECHO_FILE), spec)?;

    let mut cells = Vec::new();
    for ((id, h), sha) in instances.iter().zip(&shas) {
        for entry in &spec.solvers {
            for trial in 0..spec.trials {
                cells.push(Cell {
                    instance_id: id,
                    instance: h,
                    sha,
                    entry,
                    trial,
                });
            }
        }
    }
    let total_cells = cells.len();
    let todo: Vec<&Cell> = cells
        .iter()
        .filter(|c| !done.contains(&(c.instance_id.to_string(), c.entry.id.clone(), c.trial)))
        .collect();
    let ran = todo.len();

    let log = Mutex::new(ResultLog::open(&log_path)?);
    let append = |rec: ResultRecord| -> Result<()> { log.lock().expect("log lock").append(&rec) };
    if spec.cell_workers == 1 {
        for c in &todo {
            append(run_cell(spec, c)?)?;
        }
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.cell_workers)
            .build()
            .map_err(|e| HuboError::Config(format!("cannot start cell workers: {e}")))?;
        pool.install(|| todo.par_iter().try_for_each(|c| run_cell(spec, c).and_then(&append)))?;
    }

    let records = read_records(&log_path)?;
    let criterion = resolve_criterion(spec, &instances, &records)?;
    write_json(&out_dir.join(CRITERION_FILE), &criterion)?;
    let summary = compute_summary(&records, &criterion)?;
    write_json(&out_dir.join(SUMMARY_FILE), &summary)?;
    Ok(BenchOutcome {
        out_dir: out_dir.to_path_buf(),
        total_cells,
        ran,
        skipped: total_cells - ran,
    })
}

fn resolve_criterion(
    spec: &BenchmarkSpec,
    instances: &[(String, HuboInstance)],
    records: &[ResultRecord],
) -> Result<CriterionFile> {
    let mut targets = BTreeMap::new();
    for (id, h) in instances {
        let target = match &spec.criterion {
            CriterionSource::Oracle => Target {
                e_target: brute_force_ground_state(h)?.energy,
                provenance: "oracle".into(),
            },
            CriterionSource::BestOf { solver } => {
                let best = records
                    .iter()
                    .filter(|r| &r.instance_id == id && &r.solver_id == solver)
                    .map(|r| r.payload.best_energy())
                    .reduce(f64::min)
                    .ok_or_else(|| HuboError::Invalid(format!("no {solver} records for instance {id}")))?;
                Target {
                    e_target: best,
                    provenance: format!("best-of:{solver}"),
                }
            }
            CriterionSource::Explicit { e_target } => Target {
                e_target: *e_target,
                provenance: "explicit".into(),
            },
        };
        targets.insert(id.clone(), target);
    }
    Ok(CriterionFile {
        epsilon: spec.epsilon,
        p_target: spec.p_target,
        targets,
    })
}
