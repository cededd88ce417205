//! `scinet`: reproducible source-camera-identification runs.
//!
//! Subcommands: `synth` (synthetic dataset generation), `train`
//! (cross-validated training), `eval` (checkpoint evaluation), `ablate`
//! (configuration sweeps). Every run is deterministic for a given seed and
//! writes a run manifest next to its outputs.
//!
//! Exit codes: 0 success, 2 configuration/usage, 3 ingestion, 4 divergence,
//! 5 IO, 6 corrupt checkpoint.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scinet_core::data::LabelMode;
use scinet_core::train::SweepKind;
use scinet_core::Error;

mod commands;
mod context;

#[derive(Parser)]
#[command(name = "scinet", version, about = "Source camera identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic camera dataset (images + manifest + sidecar)
    Synth(SynthArgs),
    /// Train with image-level cross-validation; writes per-fold checkpoints and a report
    Train(TrainArgs),
    /// Evaluate a checkpoint against a manifest
    Eval(EvalArgs),
    /// Run an ablation sweep (topology, activation or dropout)
    Ablate(AblateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Model,
    Sensor,
}

impl From<ModeArg> for LabelMode {
    fn from(m: ModeArg) -> LabelMode {
        match m {
            ModeArg::Model => LabelMode::Model,
            ModeArg::Sensor => LabelMode::Sensor,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VoteArg {
    /// Patch-level accuracy only
    Patch,
    /// Additionally report per-image majority-vote accuracy
    Image,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepArg {
    Topology,
    Activation,
    Dropout,
}

impl From<SweepArg> for SweepKind {
    fn from(s: SweepArg) -> SweepKind {
        match s {
            SweepArg::Topology => SweepKind::Topology,
            SweepArg::Activation => SweepKind::Activation,
            SweepArg::Dropout => SweepKind::Dropout,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (one run per directory)
    #[arg(long)]
    out: PathBuf,
    /// Number of sensor classes (1..=5)
    #[arg(long, default_value_t = 5)]
    classes: usize,
    /// Images per class
    #[arg(long = "per-class", default_value_t = 100)]
    per_class: usize,
    /// Master seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fingerprint std (multiplicative pattern strength)
    #[arg(long = "sigma-f", default_value_t = 0.05, allow_negative_numbers = true)]
    sigma_f: f64,
    /// Readout noise std (additive, fresh per image)
    #[arg(long = "sigma-r", default_value_t = 0.01, allow_negative_numbers = true)]
    sigma_r: f64,
    /// Square image size in pixels
    #[arg(long, default_value_t = 128)]
    size: usize,
    /// Share a device pattern between sensors of the same device
    #[arg(long)]
    correlated: bool,
    /// Per-sensor delta std as a fraction of sigma-f (correlated mode)
    #[arg(long = "delta-fraction", default_value_t = 0.25)]
    delta_fraction: f64,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset manifest (CSV: path,device,sensor)
    #[arg(long)]
    manifest: PathBuf,
    /// Label mode: model (3 classes) or sensor (5 classes)
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Output directory (one run per directory)
    #[arg(long)]
    out: PathBuf,
    /// Master seed (overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file with optional "architecture" and "training" sections
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of cross-validation folds
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Single 90/10-style split: train on all folds but one, test on fold 0
    #[arg(long)]
    holdout: bool,
    /// Epochs (overrides the config file)
    #[arg(long)]
    epochs: Option<usize>,
    /// Accuracy granularity
    #[arg(long, value_enum, default_value_t = VoteArg::Patch)]
    vote: VoteArg,
    /// Accept JPEG inputs despite their lossy recompression
    #[arg(long = "allow-jpeg")]
    allow_jpeg: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint to evaluate
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset manifest (CSV: path,device,sensor)
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (one run per directory)
    #[arg(long)]
    out: PathBuf,
    /// Label mode; inferred from the checkpoint's class count when omitted
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Accuracy granularity
    #[arg(long, value_enum, default_value_t = VoteArg::Patch)]
    vote: VoteArg,
    /// Accept JPEG inputs despite their lossy recompression
    #[arg(long = "allow-jpeg")]
    allow_jpeg: bool,
}

#[derive(Args)]
struct AblateArgs {
    /// Which factor to sweep
    #[arg(long, value_enum)]
    sweep: SweepArg,
    /// Dataset manifest (CSV: path,device,sensor)
    #[arg(long)]
    manifest: PathBuf,
    /// Label mode: model (3 classes) or sensor (5 classes)
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Output directory (one run per directory)
    #[arg(long)]
    out: PathBuf,
    /// Master seed (overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file with optional "architecture" and "training" sections
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of cross-validation folds
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Single-split rounds instead of full cross-validation
    #[arg(long)]
    holdout: bool,
    /// Epochs (overrides the config file)
    #[arg(long)]
    epochs: Option<usize>,
    /// Accept JPEG inputs despite their lossy recompression
    #[arg(long = "allow-jpeg")]
    allow_jpeg: bool,
}

/// Exit code category for every library error.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidShape(_)
        | Error::ShapeMismatch { .. }
        | Error::InvalidRange(_)
        | Error::InvalidHyperparameter(_)
        | Error::InvalidLabel { .. }
        | Error::InvalidParameter(_)
        | Error::Config(_)
        | Error::Stratification(_)
        | Error::EmptyTestSet => 2,
        Error::Manifest { .. } | Error::Ingest { .. } | Error::TooSmall(_) => 3,
        Error::Divergence { .. } => 4,
        Error::Io(_) => 5,
        Error::CorruptCheckpoint { .. } => 6,
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Ablate(args) => commands::ablate::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
