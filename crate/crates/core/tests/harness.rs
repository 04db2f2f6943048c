mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use hubo_core::harness::{
    closeness_curves, cmd_bench, cmd_gen, cmd_import, cmd_report, cmd_solve, compute_summary, load_instance_dir,
    parse_external_trace, read_records, render_report, BenchmarkSpec, CriterionFile, Payload, Provenance, ReportFormat,
    ResultRecord, CRITERION_FILE, MANIFEST_FILE, RESULTS_FILE, SUMMARY_FILE,
};
use hubo_core::instance_gen::{random_instance, write_instance, Family};
use hubo_core::metrics::Tts;
use hubo_core::oracle::brute_force_ground_state;
use hubo_core::solvers::{SaParams, SolverConfig};
use hubo_core::{evaluate_energy, HuboError, HuboInstance, InstanceMetadata, SpinConfig};

fn keyed(records: &[ResultRecord]) -> BTreeMap<(String, String, u32), ResultRecord> {
    records.iter().map(|r| (r.key(), r.without_timing())).collect()
}

#[test]
fn gen_writes_deterministic_family_with_manifest() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let m = cmd_gen(Family::ThreeS, 10, 42, a.path()).unwrap();
    cmd_gen(Family::ThreeS, 10, 42, b.path()).unwrap();
    assert_eq!(m.instances.len(), 10);
    for e in &m.instances {
        assert_eq!(e.n_vars, 156);
        assert_eq!(e.total_terms, 1128);
        let x = fs::read(a.path().join(&e.file)).unwrap();
        let y = fs::read(b.path().join(&e.file)).unwrap();
        assert_eq!(x, y);
    }
    assert_eq!(
        fs::read(a.path().join(MANIFEST_FILE)).unwrap(),
        fs::read(b.path().join(MANIFEST_FILE)).unwrap()
    );
    assert!(cmd_gen(Family::FourS, 0, 42, a.path()).is_err());
    assert_eq!(load_instance_dir(a.path()).unwrap().len(), 10);
}

#[test]
fn gen_into_unwritable_location_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    fs::write(&file, b"x").unwrap();
    let err = cmd_gen(Family::ThreeS, 1, 1, &file.join("sub")).unwrap_err();
    assert_eq!(err.category(), "io");
}

fn two_spin(dir: &Path) -> std::path::PathBuf {
    let h = HuboInstance::new(2, vec![(vec![0, 1], 1.0)], InstanceMetadata::default()).unwrap();
    let p = dir.join("pair.jsonl");
    write_instance(&p, &h).unwrap();
    p
}

#[test]
fn solve_greedy_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    let inst = two_spin(dir.path());
    let log = dir.path().join("out").join(RESULTS_FILE);
    let a = cmd_solve(&inst, &SolverConfig::greedy(), 3, &log).unwrap();
    let b = cmd_solve(&inst, &SolverConfig::greedy(), 3, &log).unwrap();
    assert_eq!(a.payload.best_energy(), -1.0);
    assert_eq!(a.without_timing(), b.without_timing());
    let stored = read_records(&log).unwrap();
    assert_eq!(stored.len(), 2);
    assert_eq!(stored[0], a);
}

#[test]
fn solve_reports_parse_errors_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(
        &bad,
        "{\"format_version\":1,\"n_vars\":2}\n{\"arity\":2,\"vars\":[0,5],\"coeff\":1.0}\n",
    )
    .unwrap();
    let err = cmd_solve(&bad, &SolverConfig::greedy(), 0, &dir.path().join("r.ndjson")).unwrap_err();
    assert!(matches!(err, HuboError::Parse { .. }), "{err}");
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn solve_sa_matches_oracle_at_n18() {
    let dir = tempfile::tempdir().unwrap();
    let h = random_instance(18, 5).unwrap();
    let p = dir.path().join("r18.jsonl");
    write_instance(&p, &h).unwrap();
    let cfg = SolverConfig::sa(SaParams {
        n_restarts: 200,
        sweeps: 500,
        ..Default::default()
    });
    let r = cmd_solve(&p, &cfg, 1, &dir.path().join(RESULTS_FILE)).unwrap();
    let gs = brute_force_ground_state(&h).unwrap();
    assert!((r.payload.best_energy() - gs.energy).abs() <= 1e-9 * gs.energy.abs());
}

fn spec(json: &str) -> BenchmarkSpec {
    BenchmarkSpec::from_json(json, "test spec").unwrap()
}

const SMALL_SPEC: &str = r#"{
  "schema_version": 1,
  "seed": 11,
  "instances": {"kind": "random", "n_vars": 14, "count": 1, "seed": 3},
  "solvers": [{"id": "sa", "solver": {"solver": "SA", "n_restarts": 10, "sweeps": 100}}],
  "trials": 3,
  "criterion": {"source": "best-of", "solver": "sa"}
}"#;

#[test]
fn bench_runs_grid_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(SMALL_SPEC);
    let out = cmd_bench(&s, dir.path()).unwrap();
    assert_eq!((out.total_cells, out.ran), (3, 3));
    assert_eq!(read_records(dir.path().join(RESULTS_FILE)).unwrap().len(), 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary["rows"].as_array().unwrap().len(), 1);
    assert!(dir.path().join(CRITERION_FILE).exists());

    let again = cmd_bench(&s, dir.path()).unwrap();
    assert!(again.was_complete());
    assert_eq!(read_records(dir.path().join(RESULTS_FILE)).unwrap().len(), 3);
}

#[test]
fn interrupted_bench_resumes_to_the_same_records() {
    let s = spec(SMALL_SPEC);
    let full = tempfile::tempdir().unwrap();
    cmd_bench(&s, full.path()).unwrap();
    let reference = keyed(&read_records(full.path().join(RESULTS_FILE)).unwrap());

    // keep one complete record plus half of the next, as a crash would
    let cut = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(full.path().join(RESULTS_FILE)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let torn = format!("{}\n{}", lines[0], &lines[1][..lines[1].len() / 2]);
    fs::write(cut.path().join(RESULTS_FILE), torn).unwrap();
    assert_eq!(read_records(cut.path().join(RESULTS_FILE)).unwrap().len(), 1);
    let out = cmd_bench(&s, cut.path()).unwrap();
    assert_eq!(out.ran, 2);
    assert_eq!(keyed(&read_records(cut.path().join(RESULTS_FILE)).unwrap()), reference);
}

#[test]
fn oracle_criterion_flags_finite_tts() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(
        r#"{
      "schema_version": 1,
      "seed": 5,
      "instances": {"kind": "random", "n_vars": 18, "count": 2, "seed": 70},
      "solvers": [
        {"id": "sa", "solver": {"solver": "SA", "n_restarts": 100, "sweeps": 300}},
        {"id": "greedy", "solver": {"solver": "GREEDY"}}
      ],
      "trials": 4,
      "criterion": {"source": "oracle"}
    }"#,
    );
    cmd_bench(&s, dir.path()).unwrap();
    let crit = CriterionFile::load(dir.path()).unwrap();
    for (id, t) in &crit.targets {
        assert_eq!(t.provenance, "oracle");
        let h = random_instance(18, if id.ends_with("000") { 70 } else { 71 }).unwrap();
        assert_eq!(t.e_target, brute_force_ground_state(&h).unwrap().energy);
    }
    let summary = compute_summary(&read_records(dir.path().join(RESULTS_FILE)).unwrap(), &crit).unwrap();
    for row in summary.rows.iter().filter(|r| r.solver_id == "sa") {
        assert!(row.tts.is_finite(), "{row:?}");
    }
}

#[test]
fn bench_with_pipeline_entry() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(
        r#"{
      "schema_version": 1,
      "seed": 1,
      "instances": {"kind": "random", "n_vars": 12, "count": 1, "seed": 9},
      "solvers": [{"id": "hybrid", "pipeline": {
        "stages": [{"stage": "sa-warm-start", "params": {"n_restarts": 5, "sweeps": 50}},
                   {"stage": "perturb-restart", "copies": 4, "flip_probability": 0.1},
                   {"stage": "greedy-refine"}],
        "budgets": [5.0, 1.0, 1.0]}}],
      "trials": 2,
      "criterion": {"source": "explicit", "e_target": -1.0}
    }"#,
    );
    cmd_bench(&s, dir.path()).unwrap();
    let recs = read_records(dir.path().join(RESULTS_FILE)).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(matches!(recs[0].payload, Payload::Pipeline(_)));
    assert_eq!(recs[0].payload.trace().len(), 3.min(recs[0].payload.trace().len()));
}

#[test]
fn spec_errors() {
    let bad_trials = SMALL_SPEC.replace("\"trials\": 3", "\"trials\": 0");
    assert!(BenchmarkSpec::from_json(&bad_trials, "t").is_err());
    let unknown = SMALL_SPEC.replace("\"solver\": \"sa\"}", "\"solver\": \"nope\"}");
    assert!(BenchmarkSpec::from_json(&unknown, "t").is_err());
    let err = BenchmarkSpec::from_json("{\"schema_version\": 1", "spec.json").unwrap_err();
    assert_eq!(err.category(), "parse");
}

fn trace_line(instance: &str, trial: u32, t: f64, e: f64, spins: Option<&SpinConfig>) -> String {
    match spins {
        Some(c) => format!(
            r#"{{"solver":"ext","instance_id":"{instance}","trial":{trial},"elapsed_seconds":{t},"energy":{e:e},"spins":"{c}"}}"#
        ),
        None => format!(
            r#"{{"solver":"ext","instance_id":"{instance}","trial":{trial},"elapsed_seconds":{t},"energy":{e:e}}}"#
        ),
    }
}

#[test]
fn import_validates_energies() {
    let dir = tempfile::tempdir().unwrap();
    let h = random_instance(12, 8).unwrap();
    let mut instances = BTreeMap::new();
    instances.insert("r".to_string(), h.clone());
    let c = SpinConfig::all_up(12);
    let e = evaluate_energy(&h, &c).unwrap();
    let lines = [
        trace_line("r", 0, 0.1, e, Some(&c)),
        trace_line("r", 1, 0.1, e * 1.01, Some(&c)),
        trace_line("r", 2, 0.1, e, None),
        trace_line("r", 2, 0.3, e - 1.0, None),
    ];
    let path = dir.path().join("trace.jsonl");
    fs::write(&path, lines.join("\n")).unwrap();
    let out = cmd_import(&path, "EXT", &instances, dir.path()).unwrap();
    assert_eq!((out.records, out.flagged, out.unverifiable), (3, 1, 1));
    let recs = read_records(dir.path().join(RESULTS_FILE)).unwrap();
    assert!(!recs[0].flagged && recs[0].provenance == Provenance::Imported);
    assert!(recs[1].flagged);
    assert_eq!(recs[2].provenance, Provenance::ImportedUnverifiable);
    assert_eq!(recs[2].payload.best_energy(), e - 1.0);
    assert_eq!(recs[2].payload.trace().len(), 2);

    let again = cmd_import(&path, "EXT", &instances, dir.path()).unwrap();
    assert_eq!((again.records, again.skipped), (0, 3));
}

#[test]
fn import_schema_violations_name_the_field() {
    let err = parse_external_trace(
        r#"{"solver":"x","instance_id":"a","trial":0,"elapsed_seconds":-1.0,"energy":1.0}"#,
        "t.jsonl",
    )
    .unwrap_err();
    assert!(err.to_string().contains("elapsed_seconds"), "{err}");
    let err =
        parse_external_trace(r#"{"solver":"x","instance_id":"a","trial":0,"energy":1.0}"#, "t.jsonl").unwrap_err();
    assert!(err.to_string().contains("elapsed_seconds"), "{err}");
    let err = parse_external_trace(
        r#"{"solver":"x","instance_id":"a","trial":0,"elapsed_seconds":1.0,"energy":1.0,"spins":"+0"}"#,
        "t.jsonl",
    )
    .unwrap_err();
    assert!(err.to_string().contains("line 1"), "{err}");
}

#[test]
fn reports_are_pure_and_closeness_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(&SMALL_SPEC.replace("\"count\": 1", "\"count\": 2"));
    cmd_bench(&s, dir.path()).unwrap();
    let before = fs::read(dir.path().join(RESULTS_FILE)).unwrap();
    let p1 = cmd_report(dir.path(), ReportFormat::SummaryTable, None).unwrap();
    let first = fs::read_to_string(&p1).unwrap();
    cmd_report(dir.path(), ReportFormat::SummaryTable, None).unwrap();
    assert_eq!(fs::read_to_string(&p1).unwrap(), first);
    assert_eq!(fs::read(dir.path().join(RESULTS_FILE)).unwrap(), before);
    assert_eq!(first.lines().count(), 2);

    let csv_text = render_report(dir.path(), ReportFormat::ClosenessCsv).unwrap();
    let records = read_records(dir.path().join(RESULTS_FILE)).unwrap();
    let crit = CriterionFile::load(dir.path()).unwrap();
    let curves = closeness_curves(&records, &crit).unwrap();
    let curve = curves.values().next().unwrap();
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let mut k = 0;
    for row in rdr.records() {
        let row = row.unwrap();
        let t: f64 = row[2].parse().unwrap();
        assert_eq!(t, curve.grid[k]);
        let mean: Option<f64> = if row[3].is_empty() {
            None
        } else {
            Some(row[3].parse().unwrap())
        };
        assert_eq!(mean, curve.mean[k]);
        let sigma: Option<f64> = if row[4].is_empty() {
            None
        } else {
            Some(row[4].parse().unwrap())
        };
        assert_eq!(sigma, curve.sigma[k]);
        k += 1;
    }
    assert_eq!(k, curve.grid.len());

    let scatter = render_report(dir.path(), ReportFormat::TtsScatterCsv).unwrap();
    assert_eq!(scatter.lines().count(), 3);

    let empty = tempfile::tempdir().unwrap();
    assert!(render_report(empty.path(), ReportFormat::SummaryTable).is_err());
}

#[test]
fn summary_rows_count_infinite_tts() {
    let dir = tempfile::tempdir().unwrap();
    // explicit target below anything greedy reaches: every TTS is infinite
    let s = spec(&SMALL_SPEC.replace(
        r#"{"source": "best-of", "solver": "sa"}"#,
        r#"{"source": "explicit", "e_target": -1e9}"#,
    ));
    cmd_bench(&s, dir.path()).unwrap();
    let table = render_report(dir.path(), ReportFormat::SummaryTable).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "");
    assert_eq!(row[6], "1");
    let crit = CriterionFile::load(dir.path()).unwrap();
    let sum = compute_summary(&read_records(dir.path().join(RESULTS_FILE)).unwrap(), &crit).unwrap();
    assert_eq!(sum.rows[0].tts, Tts::Infinite);
}
