//! Append-only result log: one self-describing JSON record per line.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{HuboError, Result};
use crate::model::SpinConfig;
use crate::pipeline::PipelineResult;
use crate::rng::RNG_NAME;
use crate::solvers::{RunResult, TracePoint};

pub const RECORD_SCHEMA_VERSION: u32 = 1;
pub const RESULTS_FILE: &str = "results.ndjson";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactVersions {
    pub crate_version: String,
    pub rng: String,
    pub record_schema: u32,
}

impl ArtifactVersions {
    pub fn current() -> Self {
        ArtifactVersions {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_NAME.to_string(),
            record_schema: RECORD_SCHEMA_VERSION,
        }
    }
}

/// A trace ingested from an external solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportedRun {
    pub best_energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_config: Option<SpinConfig>,
    pub trace: Vec<TracePoint>,
    /// Seconds.
    pub elapsed_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Run(RunResult),
    Pipeline(PipelineResult),
    Imported(ImportedRun),
}

impl Payload {
    pub fn best_energy(&self) -> f64 {
        match self {
            Payload::Run(r) => r.best_energy,
            Payload::Pipeline(p) => p.best_energy,
            Payload::Imported(i) => i.best_energy,
        }
    }

    pub fn best_config(&self) -> Option<&SpinConfig> {
        match self {
            Payload::Run(r) => Some(&r.best_config),
            Payload::Pipeline(p) => Some(&p.best_config),
            Payload::Imported(i) => i.best_config.as_ref(),
        }
    }

    /// Seconds of solver execution, the `t_run` of a TTS estimate.
    pub fn solver_seconds(&self) -> f64 {
        match self {
            Payload::Run(r) => r.elapsed_total,
            Payload::Pipeline(p) => p.total,
            Payload::Imported(i) => i.elapsed_total,
        }
    }

    /// Best-so-far energy over time. A pipeline contributes one point per
    /// stage, at the stage's cumulative end time.
    pub fn trace(&self) -> Vec<TracePoint> {
        match self {
            Payload::Run(r) => r.trace.clone(),
            Payload::Imported(i) => i.trace.clone(),
            Payload::Pipeline(p) => {
                let mut t = 0.0;
                let mut out: Vec<TracePoint> = Vec::new();
                for s in &p.stages {
                    t += s.duration;
                    match out.last_mut() {
                        Some(last) if t <= last.t => last.energy = last.energy.min(s.best_energy),
                        _ => out.push(TracePoint {
                            t,
                            energy: s.best_energy,
                        }),
                    }
                }
                out
            }
        }
    }

    pub fn attempted_flips(&self) -> Option<u64> {
        match self {
            Payload::Run(r) => Some(r.attempted_flips),
            Payload::Pipeline(p) => Some(p.stages.iter().map(|s| s.run.attempted_flips).sum()),
            Payload::Imported(_) => None,
        }
    }

    fn strip_timing(&mut self) {
        match self {
            Payload::Run(r) => *r = r.without_timing(),
            Payload::Pipeline(p) => {
                p.total = 0.0;
                p.overhead = 0.0;
                for s in &mut p.stages {
                    s.duration = 0.0;
                    s.run = s.run.without_timing();
                }
            }
            Payload::Imported(i) => {
                i.trace.clear();
                i.elapsed_total = 0.0;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Produced by this library.
    Native,
    /// Imported, with every included configuration re-evaluated.
    Imported,
    /// Imported without configurations (or without the instance), so the
    /// energies could not be checked.
    ImportedUnverifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub instance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_family: Option<String>,
    /// SHA-256 of the serialized instance, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_sha256: Option<String>,
    pub solver_id: String,
    pub trial: u32,
    pub seed: u64,
    /// The effective solver or pipeline configuration.
    pub config: serde_json::Value,
    pub provenance: Provenance,
    /// Set when a stored energy disagrees with its configuration.
    #[serde(default)]
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Unix seconds bracketing the solver call.
    pub started_at: f64,
    pub finished_at: f64,
    /// Seconds spent around the solver call but outside it (setup,
    /// bookkeeping); file I/O is not included.
    pub overhead_seconds: f64,
    pub versions: ArtifactVersions,
    pub payload: Payload,
}

impl ResultRecord {
    pub fn key(&self) -> (String, String, u32) {
        (self.instance_id.clone(), self.solver_id.clone(), self.trial)
    }

    /// The record with every wall-clock quantity zeroed.
    pub fn without_timing(&self) -> ResultRecord {
        let mut r = self.clone();
        r.started_at = 0.0;
        r.finished_at = 0.0;
        r.overhead_seconds = 0.0;
        r.payload.strip_timing();
        r
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Appends records, one line each, flushing after every write.
#[derive(Debug)]
pub struct ResultLog {
    path: PathBuf,
    file: File,
}

impl ResultLog {
    /// Opens `path` for appending. A torn final line left by an
    /// interrupted writer is cut off first.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| HuboError::io(dir, e))?;
        }
        if path.exists() {
            let bytes = fs::read(&path).map_err(|e| HuboError::io(&path, e))?;
            if !bytes.is_empty() && bytes.last() != Some(&b'\n') {
                let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
                let f = OpenOptions::new()
                    .write(true)
                    .open(&path)
                    .map_err(|e| HuboError::io(&path, e))?;
                f.set_len(keep as u64).map_err(|e| HuboError::io(&path, e))?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| HuboError::io(&path, e))?;
        Ok(ResultLog { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &ResultRecord) -> Result<()> {
        let mut line =
            serde_json::to_string(record).map_err(|e| HuboError::Invalid(format!("record does not serialize: {e}")))?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| HuboError::io(&self.path, e))
    }
}

/// Reads every record; a missing file reads as empty. An unterminated
/// last line (an interrupted write) is ignored.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(|e| HuboError::io(path, e))?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(complete.as_bytes()).lines().enumerate() {
        let line = line.map_err(|e| HuboError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ResultRecord = serde_json::from_str(&line)
            .map_err(|e| HuboError::parse(format!("{} line {}", path.display(), i + 1), e.to_string()))?;
        if rec.schema_version != RECORD_SCHEMA_VERSION {
            return Err(HuboError::parse(
                format!("{} line {}, field schema_version", path.display(), i + 1),
                format!("unsupported version {}", rec.schema_version),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}
