//! `refinelab` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, 2 input error, 3 engine or solver failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "refinelab", version, about = "Delaunay refinement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a generated configuration as a .poly file.
    Generate(GenerateArgs),
    /// Refine a .poly file and write report, trace, mesh and SVG.
    Refine(RefineArgs),
    /// Locate the largest terminating angle threshold by bisection.
    Scan(ScanArgs),
    /// Solve for the balanced four-segment spiral parameters.
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Pav,
    Pinwheel,
    Example2,
    #[value(name = "example2-opt")]
    Example2Opt,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    family: FamilyArg,
    /// Segment count for pinwheel.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Opening angle for example2, degrees.
    #[arg(long, default_value_t = 75.0)]
    theta: f64,
    /// Half-length of the upper segment for example2.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Enclosure side as a multiple of the configuration diameter.
    #[arg(long, default_value_t = refinelab::generators::DEFAULT_ENCLOSURE_SCALE)]
    scale: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgArg {
    Ruppert,
    Chew2,
}

impl From<AlgArg> for refinelab::Algorithm {
    fn from(a: AlgArg) -> Self {
        match a {
            AlgArg::Ruppert => refinelab::Algorithm::Ruppert,
            AlgArg::Chew2 => refinelab::Algorithm::Chew2,
        }
    }
}

#[derive(Debug, Args)]
struct EngineArgs {
    #[arg(long, value_enum, default_value = "ruppert")]
    alg: AlgArg,
    #[arg(long, default_value_t = 10_000)]
    max_insertions: usize,
    /// Stop when the shortest subsegment drops below this fraction of the
    /// shortest input segment.
    #[arg(long, default_value_t = 2f64.powi(-12))]
    min_length_ratio: f64,
    /// Count points on a diametral circle as encroaching.
    #[arg(long)]
    closed: bool,
    /// Take skinny triangles in creation order instead of worst first.
    #[arg(long)]
    fifo: bool,
}

#[derive(Debug, Args)]
struct RefineArgs {
    input: PathBuf,
    /// Minimum angle threshold, degrees.
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    engine: EngineArgs,
    /// Output path prefix (default: input path without extension).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Omit wall time from the report.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// A .poly file, or one of: pav, pinwheel3, pinwheel4, pinwheel5, example2, example2-opt.
    target: String,
    #[arg(long)]
    lo: f64,
    #[arg(long)]
    hi: f64,
    #[arg(long, default_value_t = 0.1)]
    tol: f64,
    /// Perturbation for generated targets.
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Starting point: theta (deg), a, alpha1 (deg), alpha2 (deg).
    #[arg(long, num_args = 4, value_names = ["THETA", "A", "ALPHA1", "ALPHA2"], allow_negative_numbers = true)]
    guess: Option<Vec<f64>>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Refine(a) => commands::refine(a),
        Command::Scan(a) => commands::scan(a),
        Command::Solve(a) => commands::solve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
