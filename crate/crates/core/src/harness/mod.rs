//! Persistence and command front end: instance generation, single solves,
//! benchmark grids, trace import and reports.

mod bench;
mod import;
mod record;
mod report;
mod spec;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bench::{cell_seed, cmd_bench, BenchOutcome, SPEC_ECHO_FILE};
pub use import::{
    cmd_import, energy_matches, import_entries, parse_external_trace, read_external_trace, ExternalTraceEntry,
    ImportOutcome, IMPORT_TOLERANCE,
};
pub use record::{
    read_records, unix_now, ArtifactVersions, ImportedRun, Payload, Provenance, ResultLog, ResultRecord,
    RECORD_SCHEMA_VERSION, RESULTS_FILE,
};
pub use report::{
    closeness_csv, closeness_curves, cmd_report, compute_summary, median_tts, render_report, summary_table,
    tts_scatter, CriterionFile, ReportFormat, Summary, SummaryRow, Target, CLOSENESS_GRID_POINTS, CRITERION_FILE,
    SUMMARY_FILE,
};
pub use spec::{
    instance_file_stem, BenchmarkSpec, CriterionSource, InstanceSource, PipelineSpec, SolverEntry, StageSpec,
    SPEC_SCHEMA_VERSION,
};

use crate::error::{HuboError, Result};
use crate::instance_gen::{generate_family, read_instance, serialize_instance, Family, DEFAULT_SCHEDULE_NAME};
use crate::model::HuboInstance;
use crate::solvers::{run_solver, SolverConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const INSTANCE_EXTENSION: &str = "jsonl";

pub fn instance_sha256(instance: &HuboInstance) -> String {
    let d = Sha256::digest(serialize_instance(instance).as_bytes());
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary sibling and a rename, so readers never see
/// a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HuboError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| HuboError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HuboError::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| HuboError::Invalid(format!("{} does not serialize: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub seed: u64,
    pub n_vars: usize,
    /// Terms by arity: one-, two- and three-local.
    pub term_counts: [usize; 3],
    pub total_terms: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub family: Family,
    pub n_swap_layers: u32,
    pub count: usize,
    pub base_seed: u64,
    pub schedule: String,
    pub instances: Vec<ManifestEntry>,
}

/// Writes `count` instances of `family` and a manifest into `out_dir`.
/// Output depends only on the arguments.
pub fn cmd_gen(family: Family, count: usize, seed: u64, out_dir: &Path) -> Result<Manifest> {
    let instances = generate_family(family, count, seed)?;
    fs::create_dir_all(out_dir).map_err(|e| HuboError::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(count);
    for (k, h) in instances.iter().enumerate() {
        let file = format!("{}.{INSTANCE_EXTENSION}", instance_file_stem(family.label(), k));
        let text = serialize_instance(h);
        write_atomic(&out_dir.join(&file), text.as_bytes())?;
        let counts = h.term_counts();
        entries.push(ManifestEntry {
            file,
            seed: h.metadata().seed.expect("generated instances record their seed"),
            n_vars: h.n_vars(),
            term_counts: counts,
            total_terms: counts.iter().sum(),
            sha256: instance_sha256(h),
        });
    }
    let manifest = Manifest {
        family,
        n_swap_layers: family.n_swap_layers(),
        count,
        base_seed: seed,
        schedule: DEFAULT_SCHEDULE_NAME.to_string(),
        instances: entries,
    };
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Every `*.jsonl` instance in `dir`, keyed by file stem.
pub fn load_instance_dir(dir: &Path) -> Result<BTreeMap<String, HuboInstance>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| HuboError::io(dir, e))?;
    for e in entries {
        let path = e.map_err(|e| HuboError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == INSTANCE_EXTENSION) {
            let stem = path.file_stem().expect("has extension").to_string_lossy().into_owned();
            out.insert(stem, read_instance(&path)?);
        }
    }
    Ok(out)
}

pub fn load_solver_config(path: &Path) -> Result<SolverConfig> {
    let text = fs::read_to_string(path).map_err(|e| HuboError::io(path, e))?;
    let cfg: SolverConfig =
        serde_json::from_str(&text).map_err(|e| HuboError::parse(path.display().to_string(), e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one solver on one instance file and appends the record to `log`.
pub fn cmd_solve(instance_path: &Path, cfg: &SolverConfig, seed: u64, log: &Path) -> Result<ResultRecord> {
    let instance = read_instance(instance_path)?;
    cfg.validate()?;
    let instance_id = instance_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let started_at = unix_now();
    let bracket = Instant::now();
    let run = run_solver(&instance, cfg, seed)?;
    let wall = bracket.elapsed().as_secs_f64();
    let finished_at = unix_now();
    let payload = Payload::Run(run);
    let record = ResultRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        instance_id,
        instance_family: instance.metadata().family.clone(),
        instance_sha256: Some(instance_sha256(&instance)),
        solver_id: cfg.name().to_string(),
        trial: 0,
        seed,
        config: serde_json::to_value(cfg).expect("config serializes"),
        provenance: Provenance::Native,
        flagged: false,
        note: None,
        started_at,
        finished_at,
        overhead_seconds: (wall - payload.solver_seconds()).max(0.0),
        versions: ArtifactVersions::current(),
        payload,
    };
    ResultLog::open(log)?.append(&record)?;
    Ok(record)
}
