use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod store;

/// Hybrid Bayesian networks over tabular data and clinical text embeddings.
#[derive(Debug, Parser)]
#[command(name = "hbn", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a synthetic train/test split with embeddings.
    Simulate(SimulateArgs),
    /// Train one model and write a checkpoint directory.
    Train(TrainArgs),
    /// Print diagnosis posteriors for a single record.
    Infer(InferArgs),
    /// Train and score every planned model over several seeds.
    Evaluate(EvaluateArgs),
    /// Render a saved result table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON file with default values for any flag.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Ground-truth network JSON; the built-in default when omitted.
    #[arg(long, value_name = "PATH")]
    pub ground_truth: Option<PathBuf>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Bn,
    Bnpp,
    Ff,
    Gen,
    Discr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvidenceArg {
    Bst,
    Bs,
    Bt,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset directory (as written by `simulate`).
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// Embedding file; defaults to `embeddings.jsonl` in the data directory.
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Drop the diagnosis-text arcs (gen and discr only).
    #[arg(long)]
    pub ablate: bool,
    /// Covariance regularization of the text Gaussians.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Checkpoint directory.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Checkpoint directory written by `train`.
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    /// One dataset row as inline JSON or a path to a file holding it. An
    /// optional `"vec"` field carries the embedding.
    #[arg(long, value_name = "JSON|PATH")]
    pub record: String,
    #[arg(long, value_enum)]
    pub evidence: EvidenceArg,
    /// Embedding file to look the record's id up in.
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Restrict to one model family.
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// With --model gen|discr: evaluate the ablated variant.
    #[arg(long)]
    pub ablate: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of consecutive seeds starting at --seed (default 5).
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Also report ROC AUC (debugging only).
    #[arg(long)]
    pub auc: bool,
    /// Output directory for results.json and results.txt.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// results.json written by `evaluate`.
    #[arg(long, value_name = "PATH")]
    pub results: PathBuf,
    /// Write the table here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// 2 for numerical failures, 1 for anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .any(|c| c.downcast_ref::<hybrid_bn::Error>().is_some_and(hybrid_bn::Error::is_numerical));
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Train(a) => commands::train(a),
        Command::Infer(a) => commands::infer(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
