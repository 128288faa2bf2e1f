//! `beerlab` command line.
//!
//! Exit status: 0 success, 1 runtime or partial failure, 2 usage or
//! configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use beerlab::analysis::analyze;
use beerlab::experiment::{execute, plan_cells, CellFilter, CellOutcome, ExperimentPlan, RunMode, Store};
use beerlab::figures::report;
use beerlab::llm::network_calls;
use beerlab::par::Parallelism;
use beerlab::policy::{OrderPolicy, ScriptRule, ScriptedPolicy, TrackingDemand};
use beerlab::sim::{run_game, GameConfig};
use beerlab::stats::order_variance;
use beerlab::{InfoRegime, Stage};

#[derive(Parser)]
#[command(name = "beerlab", version, about = "Beer Distribution Game experiments with heuristic and chat-model agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one game with the same policy at every stage and print its ledger.
    Simulate(SimulateArgs),
    /// Run (or resume) every cell of a plan.
    Experiment(ExperimentArgs),
    /// Compute summary tables from a results root.
    Analyze(AnalyzeArgs),
    /// Re-run a plan with chat agents replayed from recorded transcripts.
    Replay(ReplayArgs),
    /// Draw figures (and their tables) from analysis output.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// tracking_demand, match_demand, constant:K or panic:ALPHA,BETA,TARGET
    #[arg(long, default_value = "tracking_demand")]
    policy: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "isolated")]
    regime: InfoRegime,
    /// TOML file with game parameters (defaults otherwise).
    #[arg(long)]
    game: Option<PathBuf>,
    /// Write the trace as JSON lines.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Live,
    Stub,
    Replay,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Results root.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for cells; 0 uses every core, 1 runs sequentially.
    #[arg(long = "parallel", default_value_t = 0)]
    parallel: usize,
    /// Override the plan's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Cell selector CONFIG[/REGIME[/REP]], `*` matches anything.
    #[arg(long)]
    filter: Option<CellFilter>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value = "stub")]
    mode: ModeArg,
    /// Results root holding the transcripts to replay (replay mode).
    #[arg(long)]
    replay_from: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    replay_from: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Results root.
    #[arg(long)]
    out: PathBuf,
    /// Where to write tables (default `<out>/analysis`).
    #[arg(long)]
    analysis_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Results root.
    #[arg(long)]
    out: PathBuf,
    /// Analysis tables to read (default `<out>/analysis`).
    #[arg(long)]
    analysis_dir: Option<PathBuf>,
    /// Where to write figures (default `<out>/figures`).
    #[arg(long)]
    figures_dir: Option<PathBuf>,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn parse_policy(spec: &str, game: &GameConfig, stage: Stage) -> Result<Box<dyn OrderPolicy>, String> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = || -> Result<Vec<f64>, String> {
        args.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| format!("bad number {a:?} in {spec:?}"))).collect()
    };
    let rule = match name {
        "tracking_demand" | "tracking" => return Ok(Box::new(TrackingDemand::for_stage(game, stage))),
        "match_demand" | "match" => ScriptRule::MatchDemand,
        "constant" => match nums()?.as_slice() {
            [k] if *k >= 0.0 && k.fract() == 0.0 => ScriptRule::Constant { k: *k as u32 },
            _ => return Err(format!("{spec:?}: expected constant:K")),
        },
        "panic" => match nums()?.as_slice() {
            [a, b, t] => ScriptRule::Panic { alpha: *a, beta: *b, target: *t as i64 },
            _ => return Err(format!("{spec:?}: expected panic:ALPHA,BETA,TARGET")),
        },
        other => return Err(format!("unknown policy {other:?}")),
    };
    rule.validate()?;
    Ok(Box::new(ScriptedPolicy::new(rule)))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let game = match &args.game {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(usage)?;
            toml::from_str::<GameConfig>(&text).with_context(|| format!("parsing {}", path.display())).map_err(usage)?
        }
        None => GameConfig::default(),
    };
    game.validate().map_err(usage)?;
    let mut policies = Stage::ALL
        .iter()
        .map(|&s| parse_policy(&args.policy, &game, s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| usage(anyhow::anyhow!(e)))?;
    let trace = run_game(&game, &mut policies, args.seed, args.regime).map_err(runtime)?;
    println!("stage\ttotal_cost\torder_variance");
    for s in Stage::ALL {
        let var = order_variance(&trace, s).map(|v| v.to_string()).unwrap_or_else(|_| "NA".into());
        println!("{s}\t{}\t{var}", trace.total_cost(s).to_float_literal());
    }
    println!("system\t{}", trace.system_cost().to_float_literal());
    if let Some(out) = &args.out {
        std::fs::write(out, trace.to_jsonl_string()).with_context(|| format!("writing {}", out.display())).map_err(runtime)?;
    }
    Ok(())
}

fn load_plan(run: &RunArgs) -> Result<ExperimentPlan, Failure> {
    let mut plan = ExperimentPlan::load(&run.plan).map_err(usage)?;
    if let Some(seed) = run.seed {
        plan.master_seed = seed;
    }
    Ok(plan)
}

fn run_plan(run: &RunArgs, mode: RunMode) -> Result<(), Failure> {
    let plan = load_plan(run)?;
    if let RunMode::Replay { from } = &mode {
        if !from.join("manifest.json").exists() {
            return Err(usage(anyhow::anyhow!("{} is not a results root (no manifest.json)", from.display())));
        }
    }
    let store = Store::new(&run.out);
    let filter = run.filter.clone().unwrap_or_default();
    let total = plan_cells(&plan).iter().filter(|k| filter.matches(k)).count();
    let done = AtomicUsize::new(0);
    let progress = |key: &beerlab::experiment::CellKey, outcome: &CellOutcome| {
        let n = done.fetch_add(1, Ordering::SeqCst) + 1;
        let what = match outcome {
            CellOutcome::Skipped => "already complete".to_string(),
            CellOutcome::Completed => "complete".to_string(),
            CellOutcome::Failed(reason) => format!("FAILED: {reason}"),
        };
        eprintln!("[{n}/{total}] {} {what}", key.id());
    };
    let calls_before = network_calls();
    let summary = execute(&plan, &store, &mode, Parallelism::from_count(run.parallel), &filter, &progress)
        .map_err(|e| match e {
            beerlab::experiment::ExecuteError::Setup(_) => usage(e),
            other => runtime(other),
        })?;
    println!(
        "cells selected {} completed {} skipped {} failed {} network_calls {}",
        summary.selected,
        summary.completed,
        summary.skipped,
        summary.failed.len(),
        network_calls() - calls_before
    );
    if summary.all_complete() {
        Ok(())
    } else {
        for (cell, reason) in &summary.failed {
            eprintln!("failed {cell}: {reason}");
        }
        Err(runtime(anyhow::anyhow!("{} cell(s) failed", summary.failed.len())))
    }
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Failure> {
    let mode = match (args.mode, args.replay_from) {
        (ModeArg::Live, None) => RunMode::Live,
        (ModeArg::Stub, None) => RunMode::Stub,
        (ModeArg::Replay, Some(from)) => RunMode::Replay { from },
        (ModeArg::Replay, None) => return Err(usage(anyhow::anyhow!("--mode replay needs --replay-from"))),
        (_, Some(_)) => return Err(usage(anyhow::anyhow!("--replay-from is only valid with --mode replay"))),
    };
    run_plan(&args.run, mode)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    if !args.out.join("manifest.json").exists() {
        return Err(runtime(anyhow::anyhow!("{} is not a results root (no manifest.json)", args.out.display())));
    }
    let dir = args.analysis_dir.unwrap_or_else(|| args.out.join("analysis"));
    let outcome = analyze(&args.out, &dir).map_err(runtime)?;
    println!(
        "analyzed {} complete cells ({} failed excluded) into {}",
        outcome.complete_cells,
        outcome.failed_cells,
        dir.display()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let analysis_dir = args.analysis_dir.unwrap_or_else(|| args.out.join("analysis"));
    let figures_dir = args.figures_dir.unwrap_or_else(|| args.out.join("figures"));
    let files = report(&analysis_dir, &figures_dir).map_err(runtime)?;
    println!("wrote {} files to {}", files.len(), display(&figures_dir));
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Replay(a) => run_plan(&a.run, RunMode::Replay { from: a.replay_from }),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
