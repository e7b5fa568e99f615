use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rdex_core::harness::{self, ExperimentPlan, TargetTable};
use rdex_core::metrics::metric_rows;
use rdex_core::report::build_report;
use rdex_core::trace::{read_trace_dir, RunTrace};
use rdex_core::{selfcheck, stats, suite};

#[derive(Parser)]
#[command(name = "rdex", version, about = "Constrained differential evolution: runs, targets, statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in problems.
    List,
    /// Execute an experiment plan and write one trace file per run.
    Run(RunArgs),
    /// Derive per-problem median targets from a trace directory.
    Targets {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare labelled trace directories; the first label is the reference.
    Stats(StatsArgs),
    /// Run the fast self-check battery.
    Verify,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` plan file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated problem names.
    #[arg(long)]
    problems: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long = "max-fe")]
    max_fe: Option<u64>,
    #[arg(long)]
    checkpoints: Option<usize>,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    /// `label=dir`, repeated; at least two.
    #[arg(long = "traces", required = true)]
    traces: Vec<String>,
    /// Target CSV; derived from all supplied traces when omitted.
    #[arg(long)]
    targets: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Directory for report.csv and report.txt.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_list() {
    println!("{:<22} {:<6} summary", "problem", "D");
    for info in suite::problem_info() {
        println!("{:<22} {:<6} {}", info.name, info.dims.to_string(), info.summary);
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut overrides: Vec<(&str, String)> = Vec::new();
    let mut push = |k, v: Option<String>| {
        if let Some(v) = v {
            overrides.push((k, v));
        }
    };
    push("problems", args.problems);
    push("dim", args.dim.map(|v| v.to_string()));
    push("runs_per_problem", args.runs.map(|v| v.to_string()));
    push("max_fe", args.max_fe.map(|v| v.to_string()));
    push("n_checkpoints", args.checkpoints.map(|v| v.to_string()));
    push("base_seed", args.seed.map(|v| v.to_string()));
    push("output_dir", args.out.map(|p| p.display().to_string()));
    push("jobs", args.jobs.map(|v| v.to_string()));

    let plan = ExperimentPlan::from_settings(args.config.as_deref(), &overrides)?;
    let outcome = harness::run_experiment(&plan)?;

    let mut by_problem: BTreeMap<&str, Vec<&RunTrace>> = BTreeMap::new();
    for t in &outcome.traces {
        by_problem.entry(t.problem.as_str()).or_default().push(t);
    }
    println!(
        "{} runs: {} executed, {} resumed; traces in {}",
        outcome.traces.len(),
        outcome.executed,
        outcome.resumed,
        plan.output_dir.display()
    );
    println!("{:<22} {:>5} {:>9} {:>14}", "problem", "runs", "feasible", "median f");
    for p in &plan.problems {
        let ts = &by_problem[p.as_str()];
        let feasible = ts.iter().filter(|t| t.final_cv == 0.0).count();
        let finals: Vec<f64> = ts.iter().map(|t| t.final_f).collect();
        let med = stats::median(&finals).unwrap_or(f64::NAN);
        println!("{:<22} {:>5} {:>9} {:>14.6e}", p, ts.len(), feasible, med);
    }
    Ok(())
}

fn cmd_targets(traces: &Path, out: &Path) -> Result<()> {
    let all = read_trace_dir(traces).with_context(|| format!("reading traces from {}", traces.display()))?;
    if all.is_empty() {
        bail!("no trace files in {}", traces.display());
    }
    let table = harness::derive_median_targets(&all)?;
    table.write(out).with_context(|| format!("writing {}", out.display()))?;
    println!("{} targets written to {}", table.len(), out.display());
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    if args.traces.len() < 2 {
        bail!("stats needs at least two --traces label=dir entries");
    }
    let mut sets: Vec<(String, Vec<RunTrace>)> = Vec::new();
    for spec in &args.traces {
        let (label, dir) = spec.split_once('=').with_context(|| format!("expected label=dir, got `{spec}`"))?;
        if sets.iter().any(|(l, _)| l == label) {
            bail!("duplicate label `{label}`");
        }
        let traces = read_trace_dir(Path::new(dir)).with_context(|| format!("reading traces from {dir}"))?;
        if traces.is_empty() {
            bail!("no trace files in {dir}");
        }
        sets.push((label.to_string(), traces));
    }
    let targets = match &args.targets {
        Some(path) => TargetTable::read(path).with_context(|| format!("reading targets {}", path.display()))?,
        None => {
            let all: Vec<RunTrace> = sets.iter().flat_map(|(_, ts)| ts.iter().cloned()).collect();
            harness::derive_median_targets(&all)?
        }
    };
    let rows = metric_rows(&sets, &targets)?;
    let report = build_report(&rows, &targets, args.alpha)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("report.csv"), report.to_csv())?;
    let text = report.to_text();
    fs::write(args.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_verify() -> bool {
    let results = selfcheck::run_all();
    for r in &results {
        println!("{} {}: {}", r.status(), r.name, r.detail);
    }
    let failed = results.iter().filter(|r| r.blocks()).count();
    let gaps = results.iter().filter(|r| r.status() == "GAP").count();
    println!("{} checks, {} failed, {} known gaps", results.len(), failed, gaps);
    failed == 0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            cmd_list();
            Ok(())
        }
        Command::Run(args) => cmd_run(args),
        Command::Targets { traces, out } => cmd_targets(&traces, &out),
        Command::Stats(args) => cmd_stats(args),
        Command::Verify => {
            if cmd_verify() {
                Ok(())
            } else {
                Err(anyhow::anyhow!("self-check failed"))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
