//! Command-line front end: argument parsing, config loading and experiment dispatch.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 config validation error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::capacity::admissible_from_records;
use crate::analysis::runner::{run_experiment, write_records_csv, ExperimentKind, ExperimentSpec, DEFAULT_SEED};
use crate::error::{CsiError, Result};
use crate::io::{write_atomic, write_complex_csv};
use crate::training::{
    make_fos_pilots, make_gwbe_pilots, make_orthogonal_pilots, make_wbe_pilots, round_robin_assignment, PilotScheme,
    PilotSet,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sparse-csi", version, about = "Massive-MIMO channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for Monte-Carlo trials.
    #[arg(long, global = true, env = "SPARSE_CSI_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Increase log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact-recovery rate of weighted l1 versus measurement count.
    PhaseTransition(ExperimentArgs),
    /// Downlink SINR with contaminated and perfect CSI versus array size.
    SinrVsAntennas(ExperimentArgs),
    /// Admissible UE count per pilot length for GWBE, WBE and FOS pilots.
    UserCapacity(ExperimentArgs),
    /// Covariance-aided MMSE against contaminated LS.
    Decontaminate(ExperimentArgs),
    /// NMSE of the sparse and low-rank recovery algorithms.
    Recover(ExperimentArgs),
    /// Build a pilot set and write it as complex CSV.
    Pilots(PilotArgs),
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON experiment description.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Orthogonal,
    Wbe,
    Gwbe,
    Fos,
}

#[derive(Debug, Args)]
struct PilotArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long)]
    tau: usize,
    /// UE count; defaults to the number of powers for GWBE.
    #[arg(long)]
    users: Option<usize>,
    /// Comma-separated GWBE weights.
    #[arg(long, value_delimiter = ',')]
    powers: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone)]
pub enum Task {
    Experiment { kind: ExperimentKind, config_path: PathBuf, spec: Box<ExperimentSpec> },
    Pilots { scheme: SchemeArg, tau: usize, users: usize, powers: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: Task,
    pub output_path: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub verbosity: u8,
}

impl RunConfig {
    pub fn subcommand(&self) -> &'static str {
        match &self.task {
            Task::Experiment { kind, .. } => match kind {
                ExperimentKind::PhaseTransition => "phase-transition",
                ExperimentKind::SinrVsAntennas => "sinr-vs-antennas",
                ExperimentKind::UserCapacity => "user-capacity",
                ExperimentKind::Decontaminate => "decontaminate",
                ExperimentKind::Recover => "recover",
            },
            Task::Pilots { .. } => "pilots",
        }
    }
}

/// A terminal outcome of argument handling: message for the user and the exit code.
#[derive(Debug)]
pub struct CliExit {
    pub code: i32,
    pub message: String,
}

fn load_spec(path: &Path) -> std::result::Result<ExperimentSpec, CliExit> {
    let fail = |m: String| CliExit { code: EXIT_CONFIG, message: format!("{}: {m}", path.display()) };
    let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    ExperimentSpec::from_json(&text).map_err(|e| fail(e.to_string()))
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Parse arguments, load and validate the experiment config.
pub fn parse_and_validate<I, T>(argv: I) -> std::result::Result<RunConfig, CliExit>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let code = match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
            _ => EXIT_USAGE,
        };
        CliExit { code, message: e.render().to_string() }
    })?;
    let threads = cli.threads.map(|t| t as usize).unwrap_or_else(default_threads);
    let (kind, args) = match cli.command {
        Command::PhaseTransition(a) => (ExperimentKind::PhaseTransition, a),
        Command::SinrVsAntennas(a) => (ExperimentKind::SinrVsAntennas, a),
        Command::UserCapacity(a) => (ExperimentKind::UserCapacity, a),
        Command::Decontaminate(a) => (ExperimentKind::Decontaminate, a),
        Command::Recover(a) => (ExperimentKind::Recover, a),
        Command::Pilots(p) => {
            let users = p.users.unwrap_or(p.powers.len());
            if users == 0 {
                return Err(CliExit { code: EXIT_USAGE, message: "pilots: --users (or --powers) is required".into() });
            }
            if p.out.as_os_str().is_empty() {
                return Err(CliExit { code: EXIT_USAGE, message: "pilots: --out must not be empty".into() });
            }
            return Ok(RunConfig {
                task: Task::Pilots { scheme: p.scheme, tau: p.tau, users, powers: p.powers },
                output_path: p.out,
                seed: DEFAULT_SEED,
                threads,
                verbosity: cli.verbose,
            });
        }
    };
    if args.out.as_os_str().is_empty() || args.config.as_os_str().is_empty() {
        return Err(CliExit { code: EXIT_USAGE, message: "--config and --out must not be empty".into() });
    }
    let mut spec = load_spec(&args.config)?;
    if let Some(seed) = args.seed {
        spec.seed = Some(seed);
    }
    spec.resolved_methods(kind)
        .map_err(|e| CliExit { code: EXIT_CONFIG, message: format!("{}: {e}", args.config.display()) })?;
    Ok(RunConfig {
        seed: spec.seed(),
        task: Task::Experiment { kind, config_path: args.config, spec: Box::new(spec) },
        output_path: args.out,
        threads,
        verbosity: cli.verbose,
    })
}

fn build_pilots(scheme: SchemeArg, tau: usize, users: usize, powers: &[f64]) -> Result<PilotSet> {
    match scheme {
        SchemeArg::Orthogonal => make_orthogonal_pilots(tau, users),
        SchemeArg::Wbe => make_wbe_pilots(tau, users),
        SchemeArg::Fos => make_fos_pilots(tau, &round_robin_assignment(tau, users)),
        SchemeArg::Gwbe => {
            if powers.len() != users {
                return Err(CsiError::InvalidArgument(format!("{} powers for {users} UEs", powers.len())));
            }
            make_gwbe_pilots(tau, powers)
        }
    }
}

fn run(cfg: &RunConfig) -> Result<String> {
    match &cfg.task {
        Task::Pilots { scheme, tau, users, powers } => {
            let set = build_pilots(*scheme, *tau, *users, powers)?;
            let mut buf = Vec::new();
            write_complex_csv(&mut buf, &set.matrix)?;
            write_atomic(&cfg.output_path, &buf)?;
            Ok(format!("wrote {tau}x{users} {} pilot matrix to {}", set.scheme, cfg.output_path.display()))
        }
        Task::Experiment { kind, spec, .. } => {
            if cfg.verbosity > 0 {
                eprintln!(
                    "running {} with seed {} on {} thread(s)",
                    cfg.subcommand(),
                    cfg.seed,
                    cfg.threads
                );
            }
            let records = run_experiment(*kind, spec, cfg.threads)?;
            write_records_csv(&records, &cfg.output_path)?;
            let mut summary = format!("wrote {} records to {}", records.len(), cfg.output_path.display());
            if *kind == ExperimentKind::UserCapacity {
                for name in spec.resolved_methods(*kind)? {
                    let scheme = match name.as_str() {
                        "gwbe" => PilotScheme::Gwbe,
                        "wbe" => PilotScheme::Wbe,
                        _ => PilotScheme::Fos,
                    };
                    let counts: Vec<String> = spec
                        .sweep
                        .values
                        .iter()
                        .map(|&t| format!("{}", admissible_from_records(&records, scheme, t as usize)))
                        .collect();
                    summary.push_str(&format!("; {name} admissible K = [{}]", counts.join(", ")));
                }
            }
            Ok(summary)
        }
    }
}

/// Run a validated config; prints a one-line summary and returns the process exit code.
pub fn execute(cfg: &RunConfig) -> i32 {
    let start = Instant::now();
    match run(cfg) {
        Ok(summary) => {
            println!("{summary} in {:.2}s", start.elapsed().as_secs_f64());
            EXIT_OK
        }
        Err(e @ CsiError::Config(_)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_and_validate(argv) {
        Ok(cfg) => execute(&cfg),
        Err(exit) => {
            if exit.code == EXIT_OK {
                print!("{}", exit.message);
            } else {
                eprintln!("{}", exit.message.trim_end());
            }
            exit.code
        }
    }
}
