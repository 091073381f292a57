//! `pauc`: generate data, train and evaluate partial-AUC models, run the
//! verification suite, time steps and sweep κ / ω.

mod commands;
mod config;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pauc_core::verify::CHECK_NAMES;
use pauc_core::{Formulation, MetricKind};

/// Bad flags, config contents or environment; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "pauc", version, about = "Instance-wise partial-AUC optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic Gaussian dataset to `<out>/data.csv`.
    Generate(GenerateArgs),
    /// Train a scorer; writes checkpoint.json, trace.csv and report.json.
    Train(TrainArgs),
    /// Score a CSV with a checkpoint and report OPAUC / TPAUC.
    Evaluate(EvaluateArgs),
    /// Run the property checks; exits 1 if any fails.
    Verify(VerifyArgs),
    /// Time instance-wise and pairwise steps; writes timings.csv.
    Bench(BenchArgs),
    /// Train across κ and ω values; writes sweep.csv.
    Sweep(SweepArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    /// Fraction of positives.
    #[arg(long, default_value_t = 0.1)]
    pub imbalance: f64,
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    /// Distance between the class means along each axis.
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "label")]
    pub label_col: String,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// RunConfig JSON; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of iterations.
    #[arg(long = "T")]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub metric: Option<MetricKind>,
    #[arg(long)]
    pub formulation: Option<Formulation>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "label")]
    pub label_col: String,
    /// `ALPHA,BETA`; repeatable. α = 1 reports OPAUC. Defaults to the
    /// checkpoint's own pair.
    #[arg(long = "pair", value_parser = parse_pair)]
    pub pairs: Vec<(f64, f64)>,
    /// Score with the best validation iterate instead of the final one.
    #[arg(long)]
    pub best: bool,
    /// Also write report.json, roc.csv and roc.svg here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(CHECK_NAMES))]
    pub only: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Per-class batch sizes.
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 60)]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 32)]
    pub dims: usize,
    /// Fraction of batch negatives the pairwise reference pairs with.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exit 1 unless every instance-wise doubling ratio is at most 2.6 and
    /// every pairwise one at least 3.0.
    #[arg(long)]
    pub check: bool,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
    pub kappas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,1")]
    pub omegas: Vec<f64>,
    #[arg(long = "T")]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected ALPHA,BETA, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Train(a) => commands::train(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Sweep(a) => commands::sweep(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
