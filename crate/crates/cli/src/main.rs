use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hubo_core::harness::{
    cmd_bench, cmd_gen, cmd_import, cmd_report, cmd_solve, load_instance_dir, load_solver_config, BenchmarkSpec,
    ReportFormat, RESULTS_FILE,
};
use hubo_core::instance_gen::Family;
use hubo_core::solvers::{MtsParams, PtParams, SaParams, SolverConfig};
use hubo_core::HuboError;

#[derive(Parser)]
#[command(
    name = "hubo",
    version,
    about = "Generate, solve and benchmark higher-order Ising instances"
)]
struct Cli {
    /// Global seed; overrides the seed field of a benchmark spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads per solver, 0 for all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (gen, solve, bench, import) or file (report).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a family of heavy-hex instances plus a manifest.
    Gen {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Run one solver on one instance file and append the record.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverKind::Sa, conflicts_with = "config")]
        solver: SolverKind,
        /// JSON solver configuration, e.g. {"solver":"SA","n_restarts":100}.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Run the solver x instance x trial grid of a spec file (resumable).
    Bench { spec: PathBuf },
    /// Ingest an external solver trace, re-checking energies.
    Import {
        trace: PathBuf,
        #[arg(long)]
        label: String,
        /// Directory of instance files the trace refers to.
        #[arg(long)]
        instances: Option<PathBuf>,
    },
    /// Render report data from a results directory.
    Report {
        dir: PathBuf,
        #[arg(long, value_parser = parse_format, default_value = "summary-table")]
        format: ReportFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Sa,
    Pt,
    Mts,
    Greedy,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: HuboError| e.to_string())
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: HuboError| e.to_string())
}

fn solver_config(kind: SolverKind, config: Option<&Path>) -> Result<SolverConfig> {
    if let Some(path) = config {
        return Ok(load_solver_config(path)?);
    }
    Ok(match kind {
        SolverKind::Sa => SolverConfig::sa(SaParams::default()),
        SolverKind::Pt => SolverConfig::pt(PtParams::default()),
        SolverKind::Mts => SolverConfig::mts(MtsParams::default()),
        SolverKind::Greedy => SolverConfig::greedy(),
    })
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Gen { family, count } => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("instances"));
            let manifest = cmd_gen(family, count, seed, &out)?;
            for e in &manifest.instances {
                println!(
                    "{}  N={}  terms={} (1:{} 2:{} 3:{})",
                    e.file, e.n_vars, e.total_terms, e.term_counts[0], e.term_counts[1], e.term_counts[2]
                );
            }
            println!("wrote {} instances to {}", manifest.instances.len(), out.display());
        }
        Command::Solve {
            instance,
            solver,
            config,
            time_limit,
        } => {
            let mut cfg = solver_config(solver, config.as_deref())?;
            if let Some(t) = cli.threads {
                cfg.threads = t;
            }
            if let Some(limit) = time_limit {
                cfg.time_limit = Some(limit);
            }
            let out = cli.out.unwrap_or_else(|| PathBuf::from("results"));
            let record = cmd_solve(&instance, &cfg, seed, &out.join(RESULTS_FILE))?;
            let secs = record.payload.solver_seconds();
            println!("solver        {}", record.solver_id);
            println!("best energy   {:.12}", record.payload.best_energy());
            println!("elapsed       {secs:.6} s");
            if let Some(flips) = record.payload.attempted_flips() {
                let rate = if secs > 0.0 { flips as f64 / secs } else { f64::NAN };
                println!("throughput    {rate:.4e} flips/s ({flips} attempted)");
            }
            if let Some(c) = record.payload.best_config() {
                println!("config        {c}");
            }
        }
        Command::Bench { spec } => {
            let mut spec = BenchmarkSpec::load(&spec)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            if cli.threads.is_some() {
                spec.threads = cli.threads;
            }
            let out = cli
                .out
                .or_else(|| spec.output_dir.as_ref().map(|d| spec.base_dir.join(d)))
                .unwrap_or_else(|| PathBuf::from("results"));
            let outcome = cmd_bench(&spec, &out)?;
            if outcome.was_complete() {
                println!(
                    "complete: all {} cells already recorded in {}",
                    outcome.total_cells,
                    out.display()
                );
            } else {
                println!(
                    "ran {} of {} cells ({} resumed) into {}",
                    outcome.ran,
                    outcome.total_cells,
                    outcome.skipped,
                    out.display()
                );
            }
        }
        Command::Import {
            trace,
            label,
            instances,
        } => {
            let instances = match instances {
                Some(dir) => load_instance_dir(&dir)?,
                None => Default::default(),
            };
            let out = cli.out.unwrap_or_else(|| PathBuf::from("results"));
            let o = cmd_import(&trace, &label, &instances, &out)?;
            println!(
                "imported {} records ({} flagged, {} unverifiable, {} already present)",
                o.records, o.flagged, o.unverifiable, o.skipped
            );
        }
        Command::Report { dir, format } => {
            let path = cmd_report(&dir, format, cli.out.as_deref())
                .with_context(|| format!("rendering {} from {}", format.name(), dir.display()))?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn category(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|e| e.downcast_ref::<HuboError>())
        .map(HuboError::category)
        .unwrap_or("internal")
}

fn report_error(category: &str, message: &str) {
    eprintln!("error: {message}");
    eprintln!(
        "{}",
        serde_json::json!({ "error": { "category": category, "message": message } })
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("usage", e.to_string().trim_end());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(category(&e), &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
