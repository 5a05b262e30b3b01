mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "jetq",
    version,
    about = "Jet-kernel invariants of quotient modules along {z1 = 0}"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel file utilities.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Curvature, its split, the second fundamental form and the jet metric on a grid.
    Invariants(InvariantsArgs),
    /// Order-k equivalence of two kernels along the slice.
    Equiv(EquivArgs),
    /// The bidisc quotient module.
    Bidisc {
        #[command(subcommand)]
        action: BidiscAction,
    },
    /// Curvature checks for the homogeneous rank-2 bundle with parameters (alpha, delta, beta).
    Homog(HomogArgs),
}

#[derive(Debug, Subcommand)]
enum KernelAction {
    /// Parse a kernel file and echo its canonical form.
    Parse(KernelParseArgs),
}

#[derive(Debug, Subcommand)]
enum BidiscAction {
    /// Closed-form shift blocks per degree.
    Table(TableArgs),
    /// Oracle against closed forms, plus the restricted kernel triangle.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Leave the wall-time field out of the report.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Number of tangential sample points.
    #[arg(long, default_value_t = jetq_core::grid::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Polydisc radius of the sample points.
    #[arg(long, default_value_t = jetq_core::grid::DEFAULT_RADIUS)]
    pub radius: f64,
}

#[derive(Debug, Args)]
pub struct KernelParseArgs {
    #[arg(long)]
    pub kernel: PathBuf,
    /// Parameter overrides, `name=value,...`.
    #[arg(long)]
    pub params: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct InvariantsArgs {
    #[arg(long)]
    pub kernel: PathBuf,
    #[arg(long)]
    pub params: Option<String>,
    /// Jet order of the reported jet metric.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EquivArgs {
    /// Exactly two kernel files.
    #[arg(long, num_args = 1, required = true)]
    pub kernel: Vec<PathBuf>,
    #[arg(long)]
    pub params: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, default_value_t = jetq_core::equivalence::DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 10)]
    pub p_max: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 25)]
    pub p_max: usize,
    #[arg(long, default_value_t = jetq_core::equivalence::DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct HomogArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
