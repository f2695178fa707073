use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kroncov::estimators::Method;

#[derive(Debug, Parser)]
#[command(name = "kroncov", version, about = "Kronecker-structured covariance estimation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random draw; overrides seeds in input files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Confidence parameter δ for experiments, in (0, 1).
    #[arg(long, global = true)]
    pub delta: Option<f64>,

    /// The distribution constant ω used by the bounds.
    #[arg(long, global = true)]
    pub omega: Option<f64>,

    /// Subtract the empirical mean before estimating.
    #[arg(long, global = true)]
    pub pre_center: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a model from a TOML file and sample data from it.
    Generate(GenerateArgs),
    /// Estimate a covariance matrix from a data CSV.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo experiment from a TOML spec.
    Experiment(ExperimentArgs),
    /// Run the numerical self-check battery.
    Verify,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model file.
    pub model: PathBuf,

    /// Number of observations; defaults to `n` in the model file.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Data CSV, one observation per row, no header.
    pub data: PathBuf,

    /// Outer (block-grid) dimension.
    #[arg(long)]
    pub p: usize,

    /// Inner (block) dimension.
    #[arg(long)]
    pub q: usize,

    #[arg(long, value_parser = parse_method)]
    pub method: Method,

    /// Penalty for `pls`.
    #[arg(long, conflicts_with_all = ["lambda_grid", "grid_steps"])]
    pub lambda: Option<f64>,

    /// Comma-separated descending grid for `pls`, chosen by random splits.
    #[arg(long, value_delimiter = ',', conflicts_with = "grid_steps")]
    pub lambda_grid: Option<Vec<f64>>,

    /// Builds the grid `λ₀·2^{−m}`, `m = 0..=steps`, for `pls`.
    #[arg(long)]
    pub grid_steps: Option<u32>,

    /// First grid value for `--grid-steps`; defaults to `2σ̂₁`.
    #[arg(long, requires = "grid_steps")]
    pub lambda0: Option<f64>,

    /// Fraction of the sample used for fitting during selection.
    #[arg(long, default_value_t = 0.5)]
    pub split_fraction: f64,

    /// Random splits per grid value.
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,

    /// Components kept by `pca`.
    #[arg(long)]
    pub k: Option<usize>,

    /// True covariance CSV; adds error norms to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,

    /// Also write this many factor pairs.
    #[arg(long)]
    pub factors: Option<usize>,

    /// Clip negative eigenvalues of extracted factors.
    #[arg(long, requires = "factors")]
    pub psd: bool,

    /// Name of the estimate file inside the output directory.
    #[arg(long, default_value = "estimate.csv")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment spec file.
    pub spec: PathBuf,

    /// Also write an SVG plot of the error curves.
    #[arg(long)]
    pub plot: bool,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}
