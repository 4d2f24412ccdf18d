//! `zkfl`: dataset generation, experiment runs, prover benchmarks and
//! summary reports.
//!
//! Exit codes: 0 on success, 1 on runtime or config failure, 2 on usage
//! errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use zkfl_core::config::{DatasetSource, DefenseChoice, ExperimentConfig};
use zkfl_core::data::{generate_synthetic, write_csv};
use zkfl_core::fedsim::{rounds_csv, run_experiment, Summary};
use zkfl_core::snark::bench_prove_verify;

#[derive(Debug, Parser)]
#[command(
    name = "zkfl",
    version,
    about = "Proof-gated federated gradient boosting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic `label,f1,..,fK` CSV file.
    GenData(GenDataArgs),
    /// Run the federated experiment for one or all defenses.
    Run(RunArgs),
    /// Time proving and verification of the gradient circuit.
    Bench(BenchArgs),
    /// Pretty-print a summary JSON written by `run`.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    features: usize,
    /// Label flip probability.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config; every key is optional and unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_defense)]
    defense: Option<DefenseChoice>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    byzantine_fraction: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Read the dataset from this CSV instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Worker threads; 1 gives the reference single-threaded schedule.
    #[arg(long)]
    threads: Option<usize>,
    /// Leave out wall-clock timings so the summary is reproducible byte for byte.
    #[arg(long)]
    no_timings: bool,
    #[arg(long)]
    rounds_csv: Option<PathBuf>,
    #[arg(long)]
    summary_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Instances per shard, one CSV row each.
    #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32])]
    sizes: Vec<usize>,
    /// Runs per size; the median is reported.
    #[arg(long, default_value_t = 20)]
    iterations: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    summary: PathBuf,
}

fn parse_defense(s: &str) -> Result<DefenseChoice, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown defense {s:?}; expected none, median, zkp or all"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn gen_data(args: &GenDataArgs) -> Result<()> {
    let data = generate_synthetic(args.rows, args.features, args.noise, args.seed)?;
    write_csv(&data, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn run_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)
            .with_context(|| format!("config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.defense {
        cfg.defense = v;
    }
    if let Some(v) = args.nodes {
        cfg.n_nodes = v;
    }
    if let Some(v) = args.byzantine_fraction {
        cfg.byzantine_fraction = v;
    }
    if let Some(v) = args.rounds {
        cfg.rounds = v;
    }
    if let Some(path) = &args.data {
        cfg.dataset = DatasetSource::Csv {
            path: path.clone(),
            limit_rows: None,
        };
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if args.no_timings {
        cfg.timings = false;
    }
    if args.rounds_csv.is_some() {
        cfg.output.rounds_csv = args.rounds_csv.clone();
    }
    if args.summary_json.is_some() {
        cfg.output.summary_json = args.summary_json.clone();
    }
    cfg.validate().context("invalid settings")?;
    Ok(cfg)
}

fn header(summary: &Summary) -> String {
    let mut out = format!(
        "seed {}, {} nodes ({} byzantine), {} rounds",
        summary.seed, summary.n_nodes, summary.n_byzantine, summary.rounds
    );
    if let Some(c) = summary.constraints {
        write!(out, ", {c} constraints per proof").expect("string write");
    }
    out
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = run_config(args)?;
    let result = run_experiment(&cfg)?;
    if let Some(path) = &cfg.output.rounds_csv {
        let reports = result.runs.iter().flat_map(|r| &r.reports);
        write_file(path, &rounds_csv(reports))?;
    }
    if let Some(path) = &cfg.output.summary_json {
        write_file(path, &result.summary.to_json())?;
    }
    println!("{}", header(&result.summary));
    print!("{}", result.summary.table());
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let circuit = ExperimentConfig::default().circuit;
    let loss = circuit.loss_spec()?;
    let mut csv = String::from("n_instances,prove_ms,verify_ms\n");
    for &n in &args.sizes {
        let params = circuit.gradient_params(&loss, n)?;
        let b = bench_prove_verify(&params, args.iterations, args.seed)?;
        writeln!(
            csv,
            "{},{:.3},{:.4}",
            b.n_instances, b.prove_ms, b.verify_ms
        )
        .expect("string write");
    }
    match &args.out {
        Some(path) => write_file(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn report(args: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.summary)
        .with_context(|| format!("reading {}", args.summary.display()))?;
    let summary =
        Summary::from_json(&text).with_context(|| format!("parsing {}", args.summary.display()))?;
    println!("{}", header(&summary));
    print!("{}", summary.table());
    Ok(())
}

fn parse_cli() -> Cli {
    let defaults = serde_json::to_string_pretty(&ExperimentConfig::default())
        .expect("default config serializes");
    let command = Cli::command().mut_subcommand("run", |c| {
        c.after_long_help(format!(
            "Flags override config file values. Config defaults:\n{defaults}"
        ))
    });
    let matches = command.get_matches();
    Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit())
}

fn main() -> ExitCode {
    let cli = parse_cli();
    let result = match &cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
