//! `egosenti` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 data or format
//! error, 3 internal invariant violation.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use egosenti::svm::ClassWeights;
use egosenti::Error;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "egosenti",
    version,
    about = "Sentiment classification of egocentric photostreams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split every stream into events and drop short ones.
    Segment(SegmentArgs),
    /// Train the one-vs-all SVM on all labeled images.
    Train(TrainArgs),
    /// Label every image and every manifest event with a trained model.
    Predict(PredictArgs),
    /// Event-stratified k-fold cross-validation.
    Evaluate(EvaluateArgs),
    /// Write a seeded synthetic dataset.
    Synth(SynthArgs),
}

/// Dataset inputs; the feature and catalog paths default to the ones the
/// manifest pins.
#[derive(Debug, Clone, Args, Serialize)]
struct Inputs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    cnn_features: Option<PathBuf>,
    #[arg(long)]
    anp_features: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct TrainFlags {
    /// Soft-margin cost.
    #[arg(long = "c", default_value_t = 1.0, allow_negative_numbers = true)]
    c: f64,
    /// `auto` or three comma-separated weights for positive, neutral, negative.
    #[arg(long, default_value = "auto", value_parser = parse_class_weights)]
    class_weights: ClassWeights,
    #[arg(long, default_value_t = 1e-4, allow_negative_numbers = true)]
    tolerance: f64,
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    /// Signed-root exponent applied to the CNN block.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    srn_alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    bias_scale: f64,
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Merge threshold on centroid cosine distance, in [0, 2].
    #[arg(long, default_value_t = egosenti::segmentation::DEFAULT_MERGE_THRESHOLD, allow_negative_numbers = true)]
    threshold: f64,
    /// Events with fewer images are discarded.
    #[arg(long, default_value_t = egosenti::datamodel::DEFAULT_MIN_EVENT_SIZE)]
    min_event_size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EventsFrom {
    /// The manifest's labeled events.
    Manifest,
    /// Segment the streams and label segments by their majority image label.
    Segmented,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = EventsFrom::Manifest)]
    events: EventsFrom,
    /// Merge threshold used with `--events segmented`.
    #[arg(long, default_value_t = egosenti::segmentation::DEFAULT_MERGE_THRESHOLD, allow_negative_numbers = true)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// JSON file with synthesis settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Events per class, as positive,neutral,negative.
    #[arg(long, value_parser = parse_counts)]
    events_per_class: Option<[usize; 3]>,
    #[arg(long, allow_negative_numbers = true)]
    class_signal: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    event_signal: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    cnn_dim: Option<usize>,
    #[arg(long)]
    anp_dim: Option<usize>,
    /// Use the full 4096 + 2089 feature dims.
    #[arg(long, conflicts_with_all = ["cnn_dim", "anp_dim"])]
    full_dims: bool,
    #[arg(long)]
    streams: Option<usize>,
}

fn parse_triple<T: std::str::FromStr>(text: &str) -> Result<[T; 3], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three comma-separated values, got `{text}`"
        ));
    }
    let parse = |p: &str| {
        p.parse::<T>()
            .map_err(|_| format!("`{p}` is not a valid number"))
    };
    Ok([parse(parts[0])?, parse(parts[1])?, parse(parts[2])?])
}

fn parse_class_weights(text: &str) -> Result<ClassWeights, String> {
    match text {
        "auto" => Ok(ClassWeights::Auto),
        "uniform" => Ok(ClassWeights::Uniform),
        _ => {
            let w: [f64; 3] = parse_triple(text)?;
            if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err("class weights must be positive".into());
            }
            Ok(ClassWeights::Manual(w))
        }
    }
}

fn parse_counts(text: &str) -> Result<[usize; 3], String> {
    parse_triple(text)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter(_) | Error::BadFoldCount(_) | Error::Unsatisfiable(_) => 1,
        Error::Invariant(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Segment(args) => commands::segment(args),
        Command::Train(args) => commands::train(args),
        Command::Predict(args) => commands::predict(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Synth(args) => commands::synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
