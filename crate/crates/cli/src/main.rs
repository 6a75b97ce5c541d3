//! `ugwb`: reproducible experiments on ultra-generalized Wannier bases.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ugwb::lattice::{Boundary, Flux, Window};

#[derive(Parser)]
#[command(name = "ugwb", version, about = "Ultra-generalized Wannier basis experiments")]
struct Cli {
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = "ugwb-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact eigenvalues, brackets and radii of P_n e^{-q<X>} P_n.
    LandauSpectrum(LandauSpectrumArgs),
    /// Cross-checks the analytic and grid pipelines for one Landau level.
    LandauValidate(LandauValidateArgs),
    /// Writes the grid kernel of a Landau level projection.
    LandauKernel(LandauKernelArgs),
    /// Builds and checks the basis of a kernel file.
    Ugwb(UgwbArgs),
    /// Hofstadter band projection: kernel file, decay fit, Chern marker.
    Hofstadter(HofstadterArgs),
    /// Trace per unit volume and the radius/density consistency verdict.
    TraceDensity(TraceDensityArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct LandauSpectrumArgs {
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k_max: i64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct LandauValidateArgs {
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k_max: i64,
    /// Grid points per axis.
    #[arg(long)]
    pub grid: usize,
    #[arg(long)]
    pub half_width: f64,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SourceArg {
    Closed,
    Series,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct LandauKernelArgs {
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub grid: usize,
    #[arg(long)]
    pub half_width: f64,
    #[arg(long, value_enum, default_value = "closed")]
    pub source: SourceArg,
    /// Angular cutoff of the series source (default: sized to the box).
    #[arg(long)]
    pub k_trunc: Option<i64>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Auto,
    Dense,
    Compressed,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct UgwbArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub floor: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub strategy: StrategyArg,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct HofstadterArgs {
    #[arg(long)]
    pub flux: Flux,
    #[arg(long)]
    pub size: usize,
    #[arg(long)]
    pub boundary: Boundary,
    /// `auto-lowest` or `lo,hi`.
    #[arg(long, default_value = "auto-lowest", allow_hyphen_values = true)]
    pub window: Window,
    /// Closest an eigenvalue may sit to a window edge.
    #[arg(long, default_value_t = ugwb::lattice::DEFAULT_GAP_MARGIN)]
    pub margin: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct TraceDensityArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Increasing box half-widths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub boxes: Vec<f64>,
    /// Weight exponent of the basis used for the verdict (default: half the
    /// stored decay rate, or 1).
    #[arg(long)]
    pub q: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("{}", commands::error_json("usage", &e));
        return ExitCode::from(2);
    }
    let ctx = commands::Context { seed: cli.seed, out: cli.out };
    let result = match cli.command {
        Command::LandauSpectrum(a) => commands::landau_spectrum(&ctx, &a),
        Command::LandauValidate(a) => commands::landau_validate(&ctx, &a),
        Command::LandauKernel(a) => commands::landau_kernel(&ctx, &a),
        Command::Ugwb(a) => commands::ugwb(&ctx, &a),
        Command::Hofstadter(a) => commands::hofstadter(&ctx, &a),
        Command::TraceDensity(a) => commands::trace_density(&ctx, &a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.json());
            ExitCode::from(e.code())
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("UGWB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("UGWB_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}
