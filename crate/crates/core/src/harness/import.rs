//! External solver traces.
//!
//! A trace file is JSON Lines; each line is one observation:
//!
//! ```text
//! {"solver":"ABS3","instance_id":"3S-000","trial":0,"elapsed_seconds":0.25,
//!  "energy":-412.5,"spins":"+-+-..."}
//! ```
//!
//! `spins` is optional. Lines of one (instance_id, trial) pair form one
//! run; its trace is the running minimum of `energy` over `elapsed_seconds`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::{
    read_records, unix_now, ArtifactVersions, ImportedRun, Payload, Provenance, ResultLog, ResultRecord,
    RECORD_SCHEMA_VERSION, RESULTS_FILE,
};
use crate::error::{HuboError, Result};
use crate::model::{evaluate_energy, HuboInstance, SpinConfig};
use crate::solvers::{merge_traces, TracePoint};

/// Relative tolerance between a claimed energy and its re-evaluation.
pub const IMPORT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalTraceEntry {
    pub solver: String,
    pub instance_id: String,
    pub trial: u32,
    pub elapsed_seconds: f64,
    pub energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spins: Option<SpinConfig>,
}

pub fn parse_external_trace(text: &str, source: &str) -> Result<Vec<ExternalTraceEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ctx = |field: &str| {
            if field.is_empty() {
                format!("{source} line {}", i + 1)
            } else {
                format!("{source} line {}, field {field}", i + 1)
            }
        };
        let e: ExternalTraceEntry =
            serde_json::from_str(line).map_err(|err| HuboError::parse(ctx(""), err.to_string()))?;
        if !(e.elapsed_seconds >= 0.0 && e.elapsed_seconds.is_finite()) {
            return Err(HuboError::parse(
                ctx("elapsed_seconds"),
                format!("must be finite and >= 0, got {}", e.elapsed_seconds),
            ));
        }
        if !e.energy.is_finite() {
            return Err(HuboError::parse(ctx("energy"), "must be finite"));
        }
        if e.instance_id.is_empty() {
            return Err(HuboError::parse(ctx("instance_id"), "must not be empty"));
        }
        out.push(e);
    }
    Ok(out)
}

pub fn read_external_trace(path: &Path) -> Result<Vec<ExternalTraceEntry>> {
    let text = fs::read_to_string(path).map_err(|e| HuboError::io(path, e))?;
    parse_external_trace(&text, &path.display().to_string())
}

/// Whether `claimed` matches `actual` within [`IMPORT_TOLERANCE`] relative.
pub fn energy_matches(claimed: f64, actual: f64) -> bool {
    claimed == actual || (claimed - actual).abs() <= IMPORT_TOLERANCE * actual.abs().max(claimed.abs())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportOutcome {
    pub records: usize,
    pub flagged: usize,
    pub unverifiable: usize,
    /// Runs already present in the log.
    pub skipped: usize,
}

/// Turns trace entries into records labelled `solver_label`. Instances
/// missing from `instances` leave their runs unverifiable.
pub fn import_entries(
    entries: &[ExternalTraceEntry],
    solver_label: &str,
    instances: &BTreeMap<String, HuboInstance>,
) -> Result<Vec<ResultRecord>> {
    let mut runs: BTreeMap<(String, u32), Vec<&ExternalTraceEntry>> = BTreeMap::new();
    for e in entries {
        runs.entry((e.instance_id.clone(), e.trial)).or_default().push(e);
    }
    let mut out = Vec::with_capacity(runs.len());
    for ((instance_id, trial), mut run) in runs {
        run.sort_by(|a, b| a.elapsed_seconds.total_cmp(&b.elapsed_seconds));
        let instance = instances.get(&instance_id);
        let mut flagged = false;
        let mut verifiable = instance.is_some();
        let mut mismatches = Vec::new();
        for e in &run {
            match (&e.spins, instance) {
                (Some(c), Some(h)) => {
                    if c.len() != h.n_vars() {
                        return Err(HuboError::Dimension(format!(
                            "instance {instance_id} trial {trial}: {} spins for {} variables",
                            c.len(),
                            h.n_vars()
                        )));
                    }
                    let actual = evaluate_energy(h, c)?;
                    if !energy_matches(e.energy, actual) {
                        flagged = true;
                        mismatches.push(format!(
                            "t={} claimed {} evaluates to {actual}",
                            e.elapsed_seconds, e.energy
                        ));
                    }
                }
                _ => verifiable = false,
            }
        }
        let best = run
            .iter()
            .min_by(|a, b| a.energy.total_cmp(&b.energy))
            .expect("groups are nonempty");
        let end = run.last().map_or(0.0, |e| e.elapsed_seconds);
        let points: Vec<TracePoint> = run
            .iter()
            .map(|e| TracePoint {
                t: e.elapsed_seconds,
                energy: e.energy,
            })
            .collect();
        let external_names: BTreeSet<&str> = run.iter().map(|e| e.solver.as_str()).collect();
        let mut note = format!(
            "external solver {}",
            external_names.into_iter().collect::<Vec<_>>().join(",")
        );
        if !mismatches.is_empty() {
            note.push_str("; energy mismatch: ");
            note.push_str(&mismatches.join("; "));
        }
        let now = unix_now();
        out.push(ResultRecord {
            schema_version: RECORD_SCHEMA_VERSION,
            instance_family: instance.and_then(|h| h.metadata().family.clone()),
            instance_sha256: instance.map(super::instance_sha256),
            instance_id,
            solver_id: solver_label.to_string(),
            trial,
            seed: 0,
            config: serde_json::json!({ "imported": true }),
            provenance: if verifiable {
                Provenance::Imported
            } else {
                Provenance::ImportedUnverifiable
            },
            flagged,
            note: Some(note),
            started_at: now,
            finished_at: now,
            overhead_seconds: 0.0,
            versions: ArtifactVersions::current(),
            payload: Payload::Imported(ImportedRun {
                best_energy: best.energy,
                best_config: best.spins.clone(),
                trace: merge_traces([points], best.energy, end),
                elapsed_total: end,
            }),
        });
    }
    Ok(out)
}

/// Imports a trace file into `out_dir`'s result log, skipping runs already
/// logged under the same label.
pub fn cmd_import(
    trace_path: &Path,
    solver_label: &str,
    instances: &BTreeMap<String, HuboInstance>,
    out_dir: &Path,
) -> Result<ImportOutcome> {
    if solver_label.is_empty() {
        return Err(HuboError::Config("solver label must not be empty".into()));
    }
    let entries = read_external_trace(trace_path)?;
    if entries.is_empty() {
        return Err(HuboError::parse(trace_path.display().to_string(), "no trace entries"));
    }
    let records = import_entries(&entries, solver_label, instances)?;
    let log_path = out_dir.join(RESULTS_FILE);
    let done: BTreeSet<_> = read_records(&log_path)?.iter().map(ResultRecord::key).collect();
    let mut log = ResultLog::open(&log_path)?;
    let mut outcome = ImportOutcome::default();
    for r in records {
        if done.contains(&r.key()) {
            outcome.skipped += 1;
            continue;
        }
        log.append(&r)?;
        outcome.records += 1;
        outcome.flagged += r.flagged as usize;
        outcome.unverifiable += (r.provenance == Provenance::ImportedUnverifiable) as usize;
    }
    Ok(outcome)
}
