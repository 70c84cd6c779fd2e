//! `cprlab`: generate, corrupt, train, denoise, evaluate and compare CPR
//! signal sessions.
//!
//! Exit codes:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success, all outputs written              |
//! | 1    | unexpected internal error                 |
//! | 2    | bad command line                          |
//! | 3    | schema mismatch (CSV header, config JSON) |
//! | 4    | missing channel                           |
//! | 5    | checkpoint version mismatch               |
//! | 6    | malformed checkpoint                      |
//! | 7    | I/O failure                               |
//! | 8    | invalid input or numerical failure        |

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cprlab_core::Error;

#[derive(Parser)]
#[command(name = "cprlab", version, about = "Synthetic CPR signal denoising toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize clean sessions from the Babbs model.
    Generate(GenerateArgs),
    /// Apply the artifact pipeline to clean sessions.
    Corrupt(CorruptArgs),
    /// Train the denoiser on noisy sessions.
    Train(TrainArgs),
    /// Denoise sessions with a trained checkpoint.
    Denoise(DenoiseArgs),
    /// Score a denoised session against its clean reference.
    Evaluate(EvaluateArgs),
    /// Run the proposed model and both baselines on one patient.
    Compare(CompareArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Number of patients to draw (ignored with --sweep).
    #[arg(long, default_value_t = 3)]
    pub patients: usize,
    /// Emit every profile of the parameter sweep.
    #[arg(long, conflicts_with = "default")]
    pub sweep: bool,
    /// Draw a seeded selection of sweep profiles (the default mode).
    #[arg(long)]
    pub default: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON with optional `protocol` and `params` objects.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct CorruptArgs {
    /// Clean session CSVs or directories containing them.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Corruption config JSON; missing fields take the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Noisy session CSVs or directories containing them.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Training config JSON; missing fields take the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `max_epochs`.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Args)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub clean: PathBuf,
    #[arg(long)]
    pub noisy: PathBuf,
    #[arg(long)]
    pub denoised: PathBuf,
    /// Output JSON report; score and correlation CSVs are written beside it.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value = "proposed")]
    pub method: String,
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Noisy training sessions, used to fit the vanilla autoencoder.
    #[arg(long = "train", required = true, num_args = 1..)]
    pub train: Vec<PathBuf>,
    #[arg(long)]
    pub clean: PathBuf,
    #[arg(long)]
    pub noisy: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "proposed,nlms,vanilla")]
    pub methods: Vec<String>,
    /// JSON with optional `nlms` and `vanilla` objects.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Combined report path (default `<out>/report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Schema(_) | Error::Csv(_) | Error::Json(_) => 3,
                Error::MissingChannel(_) => 4,
                Error::Version { .. } => 5,
                Error::Format(_) => 6,
                Error::Io { .. } => 7,
                _ => 8,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 7;
        }
    }
    1
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CPRLAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::invalid(format!("CPRLAB_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Corrupt(a) => commands::corrupt(&a),
        Command::Train(a) => commands::train(&a),
        Command::Denoise(a) => commands::denoise(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Compare(a) => commands::compare(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
