mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Fast Wasserstein estimates from sliced predictors and a few exact labels.
#[derive(Debug, Parser)]
#[command(name = "swreg", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Cmd,
}

/// Flags shared by every command. Unset flags fall back to the `--config`
/// file, then to defaults.
#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Plain-text `key = value` file with default settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset manifest (`path,label` CSV).
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    /// Pairs CSV with header `i,j`.
    #[arg(long, global = true)]
    pub pairs: Option<PathBuf>,
    /// Predictor preset: rg-s, rg-e, rg-o, rg-se or rg-seo.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Fit the constrained lower/upper interpolation model.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub constrained: Option<bool>,
    /// Wasserstein order.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Draw one direction set per pair for all Monte Carlo predictors.
    #[arg(long = "share-directions", global = true, num_args = 0..=1, default_missing_value = "true")]
    pub share_directions: Option<bool>,
    /// Directions (or random candidates) per predictor.
    #[arg(long = "L", global = true)]
    pub l: Option<usize>,
    /// Optimization steps for Max-SW and Min-SWGG.
    #[arg(long = "T", global = true)]
    pub t: Option<usize>,
    /// Softmax temperature of EBSW and EST.
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Sample measure pairs from a dataset.
    Pairs(commands::PairsArgs),
    /// Exact Wasserstein distances for pairs.
    Label,
    /// Fit a regression model on labeled pairs.
    Fit(commands::FitArgs),
    /// Predict distances with a fitted model.
    Predict(commands::PredictArgs),
    /// Compare predictions with exact labels.
    Eval(commands::EvalArgs),
    /// Write a dataset of simulated Gaussian mixtures.
    Simulate(commands::SimulateArgs),
    /// Constrained weight and held-out R² across dimensions.
    Sweep(commands::SweepArgs),
    /// k-nearest-neighbor classification accuracy.
    Knn(commands::KnnArgs),
    /// Pairwise distance matrix between two datasets.
    Matrix(commands::MatrixArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<swreg::Error> for CliError {
    fn from(e: swreg::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
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
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swreg: {e}");
            ExitCode::from(e.code())
        }
    }
}
