mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Optimal ADC quantization-noise shaping, delta-sigma realization and
/// multi-ADC partitioning.
#[derive(Debug, Parser)]
#[command(name = "qshape", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form and numerical optimal shaping for a channel.
    Shape(ShapeArgs),
    /// Design an NTF for the optimal shape and simulate the modulator.
    Simulate(SimulateArgs),
    /// Split the band among several ADCs.
    Partition(PartitionArgs),
    /// Capacity before and after quantization.
    Capacity(CapacityArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// `wireline`, `wireless` or `file:PATH` (CSV frequency_hz,signal_psd,noise_psd).
    #[arg(long)]
    pub channel: Option<String>,
    /// Number of frequency bins for generated channels.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Lower band edge in Hz for generated channels.
    #[arg(long)]
    pub flo: Option<f64>,
    /// Upper band edge in Hz for generated channels.
    #[arg(long)]
    pub fhi: Option<f64>,
    /// Total ADC power budget.
    #[arg(long)]
    pub power: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Flat `key=value` file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ShapeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub osr: Option<f64>,
    /// Quantizer levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Quantizer step in volts.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub max_ntf_gain: Option<f64>,
    /// Triangular dither before the quantizer.
    #[arg(long)]
    pub dither: bool,
    /// Number of simulated samples.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also write trace.csv.
    #[arg(long)]
    pub write_trace: bool,
}

#[derive(Debug, Args, Clone, Default)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of ADCs.
    #[arg(long)]
    pub n: Option<usize>,
    /// `equal-power`, `equal-power-snapped`, `equal-bandwidth` or `integer-ratio`.
    #[arg(long)]
    pub mode: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Quantization PSD CSV (column `sq_opt` or `psd`); the optimal shape
    /// at `--power` when absent.
    #[arg(long)]
    pub sq: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Shape(a) => commands::shape(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Partition(a) => commands::partition(&a),
        Command::Capacity(a) => commands::capacity(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
