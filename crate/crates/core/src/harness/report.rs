//! Summaries and CSV reports derived from a results directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::record::{read_records, ResultRecord, RESULTS_FILE};
use crate::error::{HuboError, Result};
use crate::instance_gen::io::format_f64;
use crate::metrics::{
    closeness_curve, compute_tts, default_grid, geometric_mean_tts, p_hit_from_energies, ClosenessCurve, HitCounts,
    InstanceTraces, SuccessCriterion, Tts,
};

pub const CRITERION_FILE: &str = "criterion.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CLOSENESS_GRID_POINTS: usize = 101;
const NO_FAMILY: &str = "-";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub e_target: f64,
    /// `oracle`, `best-of:<solver>` or `explicit`.
    pub provenance: String,
}

/// Success criterion of a results directory, per instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionFile {
    pub epsilon: f64,
    pub p_target: f64,
    pub targets: BTreeMap<String, Target>,
}

impl CriterionFile {
    pub fn criterion(&self, instance_id: &str) -> Result<SuccessCriterion> {
        let t = self
            .targets
            .get(instance_id)
            .ok_or_else(|| HuboError::Invalid(format!("no target energy for instance {instance_id}")))?;
        Ok(SuccessCriterion {
            e_target: t.e_target,
            epsilon: self.epsilon,
            p_target: self.p_target,
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(CRITERION_FILE);
        let text = fs::read_to_string(&path).map_err(|e| HuboError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| HuboError::parse(path.display().to_string(), e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub family: String,
    pub solver_id: String,
    pub instance_id: String,
    pub counts: HitCounts,
    pub p_hit: f64,
    /// Mean solver seconds per run.
    pub t_run: f64,
    pub tts: Tts,
    pub best_energy: f64,
    pub e_target: f64,
    pub flagged_runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flips_per_second: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub epsilon: f64,
    pub p_target: f64,
    pub rows: Vec<SummaryRow>,
}

fn family_of(r: &ResultRecord) -> String {
    r.instance_family.clone().unwrap_or_else(|| NO_FAMILY.to_string())
}

/// Per-(solver, instance) hit counts and TTS. Rows are ordered by family,
/// solver and instance.
pub fn compute_summary(records: &[ResultRecord], criterion: &CriterionFile) -> Result<Summary> {
    if records.is_empty() {
        return Err(HuboError::Invalid("no result records".into()));
    }
    let mut groups: BTreeMap<(String, String, String), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((family_of(r), r.solver_id.clone(), r.instance_id.clone()))
            .or_default()
            .push(r);
    }
    let mut rows = Vec::with_capacity(groups.len());
    for ((family, solver_id, instance_id), runs) in groups {
        let crit = criterion.criterion(&instance_id)?;
        let (p_hit, counts) = p_hit_from_energies(runs.iter().map(|r| r.payload.best_energy()), &crit)?;
        let t_run = runs.iter().map(|r| r.payload.solver_seconds()).sum::<f64>() / runs.len() as f64;
        let tts = if t_run > 0.0 {
            compute_tts(t_run, p_hit, crit.p_target)?.tts
        } else if p_hit > 0.0 {
            Tts::Finite(0.0)
        } else {
            Tts::Infinite
        };
        let flips: Option<u64> = runs.iter().map(|r| r.payload.attempted_flips()).sum();
        let seconds: f64 = runs.iter().map(|r| r.payload.solver_seconds()).sum();
        rows.push(SummaryRow {
            family,
            solver_id,
            instance_id,
            counts,
            p_hit,
            t_run,
            tts,
            best_energy: runs
                .iter()
                .map(|r| r.payload.best_energy())
                .fold(f64::INFINITY, f64::min),
            e_target: crit.e_target,
            flagged_runs: runs.iter().filter(|r| r.flagged).count(),
            flips_per_second: flips.filter(|_| seconds > 0.0).map(|f| f as f64 / seconds),
        });
    }
    Ok(Summary {
        epsilon: criterion.epsilon,
        p_target: criterion.p_target,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    SummaryTable,
    ClosenessCsv,
    TtsScatterCsv,
}

impl ReportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::SummaryTable => "summary-table",
            ReportFormat::ClosenessCsv => "closeness-csv",
            ReportFormat::TtsScatterCsv => "tts-scatter-csv",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::SummaryTable => "summary_table.csv",
            ReportFormat::ClosenessCsv => "closeness.csv",
            ReportFormat::TtsScatterCsv => "tts_scatter.csv",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = HuboError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "summary-table" => Ok(ReportFormat::SummaryTable),
            "closeness-csv" => Ok(ReportFormat::ClosenessCsv),
            "tts-scatter-csv" => Ok(ReportFormat::TtsScatterCsv),
            other => Err(HuboError::Config(format!(
                "unknown report format '{other}' (expected summary-table, closeness-csv or tts-scatter-csv)"
            ))),
        }
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

fn fmt_tts(t: Tts) -> String {
    match t {
        Tts::Finite(x) => format_f64(x),
        Tts::Infinite => "inf".into(),
    }
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let err = |e: csv::Error| HuboError::Invalid(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| HuboError::Invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per (family, solver): TTS range over finite values, geometric
/// mean over finite values and the number of infinite values (dagger).
pub fn summary_table(summary: &Summary) -> Result<String> {
    let mut groups: BTreeMap<(&str, &str), Vec<Tts>> = BTreeMap::new();
    for r in &summary.rows {
        groups.entry((&r.family, &r.solver_id)).or_default().push(r.tts);
    }
    let mut rows = Vec::new();
    for ((family, solver), tts) in groups {
        let finite: Vec<f64> = tts.iter().filter_map(Tts::finite).collect();
        let gm = geometric_mean_tts(&tts)?;
        rows.push(vec![
            family.to_string(),
            solver.to_string(),
            tts.len().to_string(),
            fmt_opt(finite.iter().copied().reduce(f64::min)),
            fmt_opt(finite.iter().copied().reduce(f64::max)),
            fmt_opt(gm.value),
            gm.excluded.to_string(),
        ]);
    }
    csv_text(
        &[
            "family",
            "solver",
            "n_instances",
            "tts_min",
            "tts_max",
            "tts_geomean",
            "dagger",
        ],
        rows,
    )
}

/// Median with infinities ordered last.
pub fn median_tts(values: &[Tts]) -> Option<Tts> {
    if values.is_empty() {
        return None;
    }
    let mut xs: Vec<f64> = values.iter().map(Tts::as_f64).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let m = if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    };
    Some(Tts::from_f64(m))
}

/// Per-instance TTS with the per-(family, solver) median.
pub fn tts_scatter(summary: &Summary) -> Result<String> {
    let mut medians: BTreeMap<(&str, &str), Vec<Tts>> = BTreeMap::new();
    for r in &summary.rows {
        medians.entry((&r.family, &r.solver_id)).or_default().push(r.tts);
    }
    let rows = summary
        .rows
        .iter()
        .map(|r| {
            let med = median_tts(&medians[&(r.family.as_str(), r.solver_id.as_str())]).expect("nonempty group");
            vec![
                r.family.clone(),
                r.solver_id.clone(),
                r.instance_id.clone(),
                fmt_tts(r.tts),
                fmt_tts(med),
            ]
        })
        .collect();
    csv_text(&["family", "solver", "instance", "tts", "median_tts"], rows)
}

/// Closeness curves per (family, solver) on a grid shared by all solvers
/// of a family, with traces grouped by instance.
pub fn closeness_curves(
    records: &[ResultRecord],
    criterion: &CriterionFile,
) -> Result<BTreeMap<(String, String), ClosenessCurve>> {
    let mut by_family: BTreeMap<String, BTreeMap<String, BTreeMap<String, Vec<_>>>> = BTreeMap::new();
    for r in records {
        by_family
            .entry(family_of(r))
            .or_default()
            .entry(r.solver_id.clone())
            .or_default()
            .entry(r.instance_id.clone())
            .or_default()
            .push(r.payload.trace());
    }
    let mut out = BTreeMap::new();
    for (family, solvers) in by_family {
        let mut per_solver = BTreeMap::new();
        for (solver, instances) in solvers {
            let groups = instances
                .into_iter()
                .map(|(id, traces)| {
                    Ok(InstanceTraces {
                        e_target: criterion.criterion(&id)?.e_target,
                        instance_id: id,
                        traces,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            per_solver.insert(solver, groups);
        }
        let all: Vec<InstanceTraces> = per_solver.values().flatten().cloned().collect();
        let grid = default_grid(&all, CLOSENESS_GRID_POINTS)?;
        for (solver, groups) in per_solver {
            out.insert((family.clone(), solver), closeness_curve(&groups, &grid)?);
        }
    }
    Ok(out)
}

pub fn closeness_csv(records: &[ResultRecord], criterion: &CriterionFile) -> Result<String> {
    let mut rows = Vec::new();
    for ((family, solver), c) in closeness_curves(records, criterion)? {
        for k in 0..c.grid.len() {
            rows.push(vec![
                family.clone(),
                solver.clone(),
                format_f64(c.grid[k]),
                fmt_opt(c.mean[k]),
                fmt_opt(c.sigma[k]),
                c.instance_ids.len().to_string(),
            ]);
        }
    }
    csv_text(&["family", "solver", "t", "mean", "sigma", "n_instances"], rows)
}

/// Renders a report from the records and criterion of `dir`.
pub fn render_report(dir: &Path, format: ReportFormat) -> Result<String> {
    let records = read_records(dir.join(RESULTS_FILE))?;
    if records.is_empty() {
        return Err(HuboError::Invalid(format!("no result records in {}", dir.display())));
    }
    let criterion = CriterionFile::load(dir)?;
    match format {
        ReportFormat::SummaryTable => summary_table(&compute_summary(&records, &criterion)?),
        ReportFormat::TtsScatterCsv => tts_scatter(&compute_summary(&records, &criterion)?),
        ReportFormat::ClosenessCsv => closeness_csv(&records, &criterion),
    }
}

/// Writes the report to `out` (default `<dir>/<format>.csv`) and returns
/// the path written.
pub fn cmd_report(dir: &Path, format: ReportFormat, out: Option<&Path>) -> Result<std::path::PathBuf> {
    let text = render_report(dir, format)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(format.file_name()));
    super::write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
