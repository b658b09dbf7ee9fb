use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "hdadbin", version, about = "Binarization of degraded scanned drawings")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "HDADBIN_THREADS")]
    pub threads: Option<usize>,

    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Binarize one image with a classical method or a trained model.
    Binarize(BinarizeArgs),
    /// Build ground truth with the MLT/IHEGT fusion and CWMF cleanup.
    Label(LabelArgs),
    /// Train the CNN on a pair dataset.
    Train(TrainArgs),
    /// Binarize one image with a trained model.
    Infer(InferArgs),
    /// Score one method on a pair dataset.
    Eval(EvalArgs),
    /// Score several methods side by side.
    Compare(CompareArgs),
    /// Write a synthetic dataset of degraded drawings with exact masks.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Default)]
pub struct MethodArgs {
    /// Method parameter k.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Odd local window side.
    #[arg(long)]
    pub window: Option<usize>,
    /// Sauvola dynamic range R.
    #[arg(long)]
    pub r: Option<f64>,
    /// MLT statistics region: local or block.
    #[arg(long)]
    pub mlt_window: Option<String>,
    /// IHEGT iteration cap.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// IHEGT mean domain: whole or exclude-background.
    #[arg(long)]
    pub ihegt_mean: Option<String>,
    /// CWMF window side.
    #[arg(long)]
    pub cwmf_window: Option<usize>,
    /// CWMF center weight.
    #[arg(long)]
    pub cwmf_weight: Option<usize>,
    /// Trained model file for the cnn method.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// CNN arithmetic: double or single.
    #[arg(long)]
    pub precision: Option<String>,
}

#[derive(Debug, Args)]
pub struct BinarizeArgs {
    /// otsu, niblack, sauvola, mlt, ihegt, pipeline or cnn.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub output: PathBuf,
    #[command(flatten)]
    pub params: MethodArgs,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Source images.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Truth map output (single input only).
    #[arg(long = "out", conflicts_with = "dataset")]
    pub output: Option<PathBuf>,
    /// Correction layer (0 = force foreground, 255 = force background, 128 = keep).
    #[arg(long, requires = "output")]
    pub corrections: Option<PathBuf>,
    /// Add the labeled pairs to this dataset directory.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Split for pairs added to a dataset: train or test.
    #[arg(long)]
    pub split: Option<String>,
    #[command(flatten)]
    pub params: MethodArgs,
}

#[derive(Debug, Args, Default)]
pub struct TrainingArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// 1 (gray) or 3 (color).
    #[arg(long)]
    pub input_channels: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Pairs to train on: train, test or all.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long = "out")]
    pub output: PathBuf,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub output: PathBuf,
    #[arg(long)]
    pub precision: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub pairs: PathBuf,
    /// train, test or all (default test).
    #[arg(long)]
    pub split: Option<String>,
    /// macro or micro.
    #[arg(long)]
    pub aggregation: Option<String>,
    /// Also write per-image rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub params: MethodArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub methods: Vec<String>,
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub aggregation: Option<String>,
    #[command(flatten)]
    pub params: MethodArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Dataset directory to create.
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Training pairs.
    #[arg(long, default_value_t = 20)]
    pub train: usize,
    /// Test pairs.
    #[arg(long, default_value_t = 12)]
    pub test: usize,
    #[arg(long, default_value_t = 448)]
    pub width: usize,
    #[arg(long, default_value_t = 448)]
    pub height: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Truth written for each pair: mask (generator) or pipeline.
    #[arg(long, default_value = "mask")]
    pub truth: String,
}
