//! `bq` — quantize chains of linear layers by per-column lattice decoding.

mod fsutil;
mod grid;
mod jsonout;
mod quantize;
mod report;
mod sweep;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bq_core::{Error as CoreError, JtaConfig, KleinRule};

#[derive(Parser)]
#[command(name = "bq", version, about = "Lattice-decoding weight quantizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize a model file and write the quantized model plus a JSON report.
    Quantize(QuantizeArgs),
    /// Run a (mu, lambda, K) grid and write per-layer sweep data.
    Sweep(SweepArgs),
    /// Check decoder invariants against the exact oracles.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KleinRuleArg {
    Squared,
    Linear,
}

impl From<KleinRuleArg> for KleinRule {
    fn from(value: KleinRuleArg) -> Self {
        match value {
            KleinRuleArg::Squared => KleinRule::DiagSquared,
            KleinRuleArg::Linear => KleinRule::DiagLinear,
        }
    }
}

#[derive(Args, Clone)]
pub struct CommonConfig {
    /// Synthetic standard-normal calibration rows.
    #[arg(long = "calib", default_value_t = 64)]
    pub calib: usize,

    /// Quantization bit-width (2..=8).
    #[arg(long, default_value_t = 3)]
    pub wbit: u8,

    /// Rows per calibration group within a column (0 = one group).
    #[arg(long = "group-size", default_value_t = 0)]
    pub group_size: usize,

    /// Row block size of the batched decoder.
    #[arg(long = "block-size", default_value_t = 8)]
    pub block_size: usize,

    /// RNG seed for calibration data and the decoding paths.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Which power of the factor diagonal enters the sampling exponent.
    #[arg(long = "klein-rule", value_enum, default_value = "squared")]
    pub klein_rule: KleinRuleArg,
}

impl CommonConfig {
    /// Completes a config, falling back to the bit-width defaults for any
    /// knob not given on the command line.
    pub fn build(&self, mu: Option<f64>, lambda: Option<f64>, k: Option<u32>) -> JtaConfig {
        let defaults = JtaConfig::for_wbit(self.wbit);
        JtaConfig {
            mu: mu.unwrap_or(defaults.mu),
            lambda: lambda.unwrap_or(defaults.lambda),
            k: k.unwrap_or(defaults.k),
            wbit: self.wbit,
            group_size: self.group_size,
            block_size: self.block_size,
            seed: self.seed,
            klein_rule: self.klein_rule.into(),
        }
    }
}

#[derive(Args)]
pub struct QuantizeArgs {
    /// Input model file (BQM1).
    #[arg(long)]
    pub model: PathBuf,

    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    #[arg(long)]
    pub mu: Option<f64>,

    #[arg(long)]
    pub lambda: Option<f64>,

    /// Randomized decoding paths per column.
    #[arg(long)]
    pub k: Option<u32>,

    #[command(flatten)]
    pub common: CommonConfig,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFormat {
    Csv,
    Json,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Input model file (BQM1).
    #[arg(long)]
    pub model: PathBuf,

    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// mu values: value, comma list, or start:end:step.
    #[arg(long, default_value = "0.6")]
    pub mu: String,

    /// lambda values: value, comma list, or start:end:step.
    #[arg(long, default_value = "0.6")]
    pub lambda: String,

    /// K values: value, comma list, or start:end:step.
    #[arg(long, default_value = "5")]
    pub k: String,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: SweepFormat,

    #[command(flatten)]
    pub common: CommonConfig,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Instances per invariant.
    #[arg(long, default_value_t = 200)]
    pub instances: usize,

    /// Problem dimension.
    #[arg(long, default_value_t = 4)]
    pub m: usize,

    /// Bit-width of the instance boxes.
    #[arg(long, default_value_t = 2)]
    pub wbit: u8,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Deliberately misalign the reference decoder's RNG streams; the
    /// equivalence check must then fail (negative control).
    #[arg(long = "inject-fault", hide = true, default_value_t = false)]
    pub inject_fault: bool,
}

/// A command failure with its process exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn io(message: impl std::fmt::Display) -> Self {
        Self::new(2, format!("error: {message}"))
    }
}

/// Solver failures exit with 3, everything else (I/O, formats, shapes,
/// parameters) with 2.
pub fn failure_from_core(e: &CoreError) -> Failure {
    fn is_solver(e: &CoreError) -> bool {
        match e {
            CoreError::NotPositiveDefinite { .. } | CoreError::DegenerateTemperature { .. } => true,
            CoreError::AtLayer { source, .. } => is_solver(source),
            _ => false,
        }
    }
    Failure::new(if is_solver(e) { 3 } else { 2 }, format!("error: {e}"))
}

fn configure_threads() {
    let n = std::env::var("BQ_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    if n > 0 {
        // Ignore the error if a pool already exists (tests call in-process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Quantize(args) => quantize::run(&args),
        Command::Sweep(args) => sweep::run(&args),
        Command::Verify(args) => verify::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
