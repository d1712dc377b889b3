use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use osc_core::extend::{Method, DEFAULT_MAX_LAYERS};
use osc_core::ScalePolicy;

#[derive(Debug, Parser)]
#[command(
    name = "osc",
    version,
    about = "Oscillation indices and extensions on finite metric spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate an instance and summarize it.
    Validate(ValidateArgs),
    /// Compute the index profile of a field over an epsilon grid.
    Index(IndexArgs),
    /// Extend a field from a subset to the whole space with one method.
    Extend(ExtendArgs),
    /// Run several extension methods and tabulate their index profiles.
    Compare(CompareArgs),
    /// Sweep the block-parity experiment over Cantor depths.
    Ex1(Ex1Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Where the instance comes from: exactly one of a file or a generator.
#[derive(Debug, Args)]
pub struct Source {
    /// Instance JSON file.
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "generate",
        required_unless_present = "generate"
    )]
    pub instance: Option<PathBuf>,
    /// Generator spec: cantor:D, ordinal:K[:B], sequence:N, random:SEED:N:DIM or random:N:DIM.
    #[arg(long, value_name = "SPEC")]
    pub generate: Option<String>,
    /// Seed for `random:N:DIM` generator specs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the main output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct Profiling {
    /// Comma-separated, strictly decreasing epsilons.
    #[arg(long, value_name = "CSV", value_delimiter = ',')]
    pub epsilon_grid: Option<Vec<f64>>,
    /// fixed:DELTA or adaptive:MULT.
    #[arg(long, default_value_t = ScalePolicy::adaptive(), value_parser = parse_policy)]
    pub policy: ScalePolicy,
}

/// Knobs shared by the extension methods.
#[derive(Debug, Args)]
pub struct MethodKnobs {
    /// Epsilon for the glue construction.
    #[arg(long, default_value_t = 0.125)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_LAYERS)]
    pub max_layers: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value = "f")]
    pub field: String,
    /// Subset to derive on; defaults to the field's domain.
    #[arg(long)]
    pub subset: Option<String>,
    #[command(flatten)]
    pub profiling: Profiling,
    #[command(flatten)]
    pub output: Output,
    /// Write (series, x, y) plot data here.
    #[arg(long, value_name = "PATH")]
    pub emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    #[arg(long, default_value = "f")]
    pub field: String,
    /// Subset to extend from; defaults to `Y` when present, else the field's domain.
    #[arg(long)]
    pub subset: Option<String>,
    #[arg(long, default_value_t = ScalePolicy::adaptive(), value_parser = parse_policy)]
    pub policy: ScalePolicy,
    #[command(flatten)]
    pub knobs: MethodKnobs,
    /// Write the instance with the extension added as field `F`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: Source,
    /// Methods to compare, comma-separated or repeated; at least two.
    #[arg(long = "method", value_name = "METHOD", value_delimiter = ',', required = true, value_parser = parse_method)]
    pub methods: Vec<Method>,
    #[arg(long, default_value = "f")]
    pub field: String,
    #[arg(long)]
    pub subset: Option<String>,
    #[command(flatten)]
    pub profiling: Profiling,
    #[command(flatten)]
    pub knobs: MethodKnobs,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_name = "PATH")]
    pub emit_plot_data: Option<PathBuf>,
    /// Report zero wall times so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct Ex1Args {
    /// Comma-separated Cantor depths.
    #[arg(long, value_delimiter = ',', default_value = "6,8,10")]
    pub depths: Vec<usize>,
    #[command(flatten)]
    pub profiling: Profiling,
    #[arg(long, default_value_t = DEFAULT_MAX_LAYERS)]
    pub max_layers: usize,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_name = "PATH")]
    pub emit_plot_data: Option<PathBuf>,
    #[arg(long)]
    pub no_timing: bool,
}

fn parse_policy(s: &str) -> Result<ScalePolicy, String> {
    let policy: ScalePolicy = if s.trim() == "adaptive" {
        ScalePolicy::adaptive()
    } else {
        s.parse().map_err(|e: osc_core::Error| e.to_string())?
    };
    policy.validate().map_err(|e| e.to_string())?;
    Ok(policy)
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: osc_core::Error| e.to_string())
}
