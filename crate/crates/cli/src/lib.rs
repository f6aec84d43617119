//! Command-line front end for the CoMP bandwidth market: scenario runs,
//! budget and bandwidth sweeps and the auction demos, all written as plot-ready CSV or JSON.
//!
//! Every emitted file records the tool version, the seed and a SHA-256 of the
//! resolved input, and reruns with the same inputs give identical bytes.

pub mod auction;
pub mod error;
pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use comp_market::flawed::FlawedInstance;
use comp_market::penalty::PenaltyAuctionInstance;
use comp_market::simulator::{RunKind, ScenarioConfig};
use serde::Serialize;

use crate::auction::MarketInstance;
use crate::error::{CliError, CliResult};
use crate::output::{emit, json_document, read_json, sibling, Provenance};
use crate::scenario::{SweepAxis, SweepPlan};

#[derive(Debug, Parser)]
#[command(
    name = "comp-market",
    version,
    about = "Bandwidth market simulator for a CoMP cluster, with auction demos"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the bandwidth market for a scenario, paired with a default-allocation baseline.
    Simulate(ScenarioArgs),
    /// Run every UE on its default bandwidth over the same traffic as the market run.
    Baseline(ScenarioArgs),
    /// Sweep budgets and cluster bandwidth over many seeds, with per-cell medians.
    #[command(name = "figure1")]
    Sweep(SweepArgs),
    /// Clear the market once from explicit bids and conservation parameters.
    Market(MarketArgs),
    /// Run the penalty-based Proportional-Share auction to its stationary point.
    PenaltyAuction(PenaltyArgs),
    /// Run the simplified bidding scheme from several starts and report how the outcome depends on them.
    FlawedDemo(FlawedArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON; keys are the config field names, missing keys take defaults.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for all random streams (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of epochs (overrides the config).
    #[arg(long)]
    pub epochs: Option<u64>,
    /// Initial budget of every UE (overrides the config).
    #[arg(long)]
    pub budget: Option<f64>,
    /// Output file; stdout when absent. CSV output also gets a `<stem>.summary.json` next to it.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Per-epoch CSV or one JSON report.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Base scenario JSON; the sweeps override budget, capacity, epochs and seed.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Initial budgets to sweep.
    #[arg(long, value_delimiter = ',', default_value = "100,500,1000,5000")]
    pub budgets: Vec<f64>,
    /// Epoch counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "100,1000")]
    pub epochs: Vec<u64>,
    /// Total cluster bandwidth values for the bandwidth sweep, split evenly over the BSs.
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    pub bandwidths: Vec<f64>,
    /// Number of seeds per cell.
    #[arg(long, default_value_t = 32)]
    pub seeds: u64,
    /// First seed; cells use `seed, seed + 1, …`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the sweep cells (0 uses all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Budget-sweep rows. CSV output adds `<stem>.medians.csv` and `<stem>.bandwidth.csv`.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// CSV tables or one JSON document.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MarketArgs {
    /// JSON with `bids` and `conservations` arrays.
    #[arg(long, value_name = "PATH")]
    pub instance: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PenaltyArgs {
    /// JSON with `R`, `se` and optional `q0`, `delta`, `tol`, `max_iters`.
    #[arg(long, value_name = "PATH")]
    pub instance: PathBuf,
    /// Per-iteration CSV trace (iter, q, r, X, welfare).
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Keep every N-th iteration in the trace; the final iteration is always kept.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trace_every: u64,
    /// Summary output; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FlawedArgs {
    /// JSON with `R`, `se`, optional `q0`, `delta`, `iters`, `tol` and a list of starts `r0`.
    #[arg(long, value_name = "PATH")]
    pub instance: PathBuf,
    /// Extra starts drawn uniformly from the simplex.
    #[arg(long, default_value_t = 0)]
    pub inits: usize,
    /// Seed for the extra starts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report output; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Per-iteration CSV of every run (q, mu, b, r).
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code: 0 on success, 1 for usage, configuration or I/O errors, 2 when the
/// numerics fail.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(args) => scenario_command("simulate", RunKind::Market, &args),
        Command::Baseline(args) => scenario_command("baseline", RunKind::Baseline, &args),
        Command::Sweep(args) => sweep_command(&args),
        Command::Market(args) => market_command(&args),
        Command::PenaltyAuction(args) => penalty_command(&args),
        Command::FlawedDemo(args) => flawed_command(&args),
    }
}

fn resolve_scenario(args: &ScenarioArgs) -> CliResult<ScenarioConfig> {
    let mut cfg = scenario::load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        cfg.epochs = epochs;
    }
    if let Some(budget) = args.budget {
        cfg.initial_budget = budget;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scenario_command(name: &'static str, kind: RunKind, args: &ScenarioArgs) -> CliResult<()> {
    let cfg = resolve_scenario(args)?;
    let prov = Provenance::new(name, Some(cfg.seed), &cfg)?;
    let report = scenario::run_kind(&cfg, kind)?;
    match args.format {
        Format::Csv => {
            emit(args.out.as_deref(), &scenario::epoch_table(&report).render(&prov)?)?;
            if let Some(out) = &args.out {
                let summary = json_document(&prov, &scenario::RunSummary::of(&report))?;
                emit(Some(&sibling(out, "summary.json")), &summary)?;
            }
            Ok(())
        }
        Format::Json => emit(args.out.as_deref(), &json_document(&prov, &report)?),
    }
}

#[derive(Serialize)]
struct SweepManifest<'a> {
    config: &'a ScenarioConfig,
    sweep: &'a SweepPlan,
}

fn sweep_command(args: &SweepArgs) -> CliResult<()> {
    if args.budgets.is_empty() || args.epochs.is_empty() || args.seeds == 0 {
        return Err(CliError::Config("figure1 needs at least one budget, epoch count and seed".into()));
    }
    let base = scenario::load_config(args.config.as_deref())?;
    let plan = SweepPlan {
        budgets: args.budgets.clone(),
        epochs: args.epochs.clone(),
        seeds: (args.seed..args.seed + args.seeds).collect(),
        bandwidths: args.bandwidths.clone(),
    };
    let prov = Provenance::new("figure1", Some(args.seed), &SweepManifest { config: &base, sweep: &plan })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let fig = pool.install(|| scenario::run_sweeps(&base, &plan))?;
    match args.format {
        Format::Csv => {
            let n = base.n_ues;
            emit(
                Some(&args.out),
                &scenario::sweep_table(&fig.budget_rows, SweepAxis::Budget, n).render(&prov)?,
            )?;
            emit(
                Some(&sibling(&args.out, "medians.csv")),
                &scenario::median_table(&fig.medians).render(&prov)?,
            )?;
            emit(
                Some(&sibling(&args.out, "bandwidth.csv")),
                &scenario::sweep_table(&fig.bandwidth_rows, SweepAxis::Bandwidth, n).render(&prov)?,
            )
        }
        Format::Json => emit(Some(&args.out), &json_document(&prov, &fig)?),
    }
}

fn market_command(args: &MarketArgs) -> CliResult<()> {
    let inst: MarketInstance = read_json(&args.instance)?;
    let prov = Provenance::new("market", None, &inst)?;
    let c = auction::run_market(&inst)?;
    let bytes = match args.format {
        Format::Csv => auction::clearing_table(&c, &inst).render(&prov)?,
        Format::Json => json_document(&prov, &c)?,
    };
    emit(args.out.as_deref(), &bytes)
}

fn penalty_command(args: &PenaltyArgs) -> CliResult<()> {
    let inst: PenaltyAuctionInstance = read_json(&args.instance)?;
    let prov = Provenance::new("penalty-auction", None, &inst)?;
    let every = if args.trace.is_some() { args.trace_every as usize } else { 0 };
    let (summary, outcome) = auction::run_penalty(&inst, every)?;
    if let Some(trace) = &args.trace {
        emit(Some(trace), &auction::penalty_trace_table(&outcome, inst.n()).render(&prov)?)?;
    }
    let bytes = match args.format {
        Format::Csv => auction::penalty_summary_table(&summary).render(&prov)?,
        Format::Json => json_document(&prov, &summary)?,
    };
    emit(args.out.as_deref(), &bytes)?;
    if !summary.converged {
        eprintln!("warning: stopped after {} iterations without converging", summary.iterations);
    }
    Ok(())
}

#[derive(Serialize)]
struct FlawedManifest<'a> {
    instance: &'a FlawedInstance,
    inits: usize,
}

fn flawed_command(args: &FlawedArgs) -> CliResult<()> {
    let inst: FlawedInstance = read_json(&args.instance)?;
    let prov = Provenance::new(
        "flawed-demo",
        Some(args.seed),
        &FlawedManifest { instance: &inst, inits: args.inits },
    )?;
    let samples = auction::initializations(&inst, args.inits, args.seed);
    let report = auction::run_flawed(&inst, &samples)?;
    if let Some(trace) = &args.trace {
        emit(Some(trace), &auction::flawed_trace_table(&inst, &samples)?.render(&prov)?)?;
    }
    let bytes = match args.format {
        Format::Csv => auction::pathology_table(&report).render(&prov)?,
        Format::Json => json_document(&prov, &report)?,
    };
    emit(args.out.as_deref(), &bytes)
}

/// Convenience for callers that already hold a path list.
pub fn dispatch_args(args: &[&str]) -> i32 {
    dispatch(std::iter::once("comp-market").chain(args.iter().copied()))
}
