//! `orlicz`: structural checks, truncation runs and plots from JSON configs.

mod check;
mod plot;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orlicz::solver::{run_pipeline, ProblemConfig};

#[derive(Parser)]
#[command(
    name = "orlicz",
    version,
    about = "Modular-space checks and renormalized solves"
)]
struct Cli {
    /// Worker threads for diagnostics.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run structural checks on a modular function.
    Check(RunArgs),
    /// Solve the truncated problems and write a report directory.
    Solve(RunArgs),
    /// Render SVG plots from a report directory.
    Plot {
        /// Report directory written by `solve`.
        report: PathBuf,
        /// Where to put the SVGs (defaults to the report directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed stored in the config.
    #[arg(long)]
    seed: Option<u64>,
}

/// Exit 1 for failed checks or diagnostics, 2 for unusable input.
pub enum Failure {
    Check(String),
    Usage(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Check(m) | Failure::Usage(m) => f.write_str(m),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

pub fn read_config(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn io_failure(e: impl fmt::Display) -> Failure {
    Failure::Usage(format!("cannot write output: {e}"))
}

fn solve(args: &RunArgs) -> Result<(), Failure> {
    let text = read_config(&args.config)?;
    let mut config =
        ProblemConfig::from_json(&text).map_err(|e| Failure::Usage(format!("bad config: {e}")))?;
    if let Some(seed) = args.seed {
        config.diagnostics.seed = seed;
    }
    // reject bad models before any solve runs
    config
        .build()
        .map_err(|e| Failure::Usage(format!("bad config: {e}")))?;
    let report = run_pipeline(&config).map_err(|e| Failure::Check(e.to_string()))?;
    report.write(&args.out).map_err(io_failure)?;
    println!("coercivity: {}", verdict(report.coercivity.pass));
    println!("apriori: {}", verdict(report.apriori.pass));
    println!("radiation: {}", verdict(report.radiation.is_nonnegative()));
    println!("report: {}", args.out.display());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check("diagnostics failed".into()))
    }
}

pub fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
    {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Check(args) => check::run(args.config.as_path(), &args.out, args.seed),
        Command::Solve(args) => solve(args),
        Command::Plot { report, out } => plot::run(report, out.as_deref().unwrap_or(report)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
