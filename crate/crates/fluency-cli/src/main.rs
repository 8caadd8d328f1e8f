//! `fluency` — speaker-fluency classification pipeline CLI.
//!
//! Subcommands mirror the pipeline stages: `synth` writes a labeled
//! synthetic corpus, `extract` turns a manifest into a feature CSV, `train`
//! and `eval` handle single models, `sweep` and `compare` run the mel-count
//! and feature-ablation experiments end to end.
//!
//! Exit codes: 0 success, 2 runtime/data error, 64 usage error.

mod commands;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_RUNTIME: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "fluency", version, about = "Speaker-fluency classification pipeline")]
struct Cli {
    /// Worker threads for parallel stages (0 = all cores). Results are
    /// identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct BankArgs {
    /// Analysis frame length in samples.
    #[arg(long = "n-fft", default_value_t = 2048, value_parser = clap::value_parser!(u64).range(2..))]
    n_fft: u64,

    /// Hop between frames in samples.
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(1..))]
    hop: u64,

    /// Mel filters in the bank.
    #[arg(long = "n-mels", default_value_t = 128, value_parser = clap::value_parser!(u64).range(1..))]
    n_mels: u64,

    /// Lower filterbank edge in Hz.
    #[arg(long, default_value_t = 0.0)]
    fmin: f64,

    /// Upper filterbank edge in Hz (default: half the sample rate).
    #[arg(long)]
    fmax: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct HyperArgs {
    /// SVM soft-margin penalty.
    #[arg(long, default_value_t = 1.0)]
    c: f64,

    /// SVM RBF width (default: 1 / n_features).
    #[arg(long)]
    gamma: Option<f64>,

    /// Random-forest tree count.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    trees: u64,

    /// MLP training epochs.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    epochs: u64,

    /// MLP mini-batch size.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    batch: u64,

    /// MLP learning rate.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,

    /// MLP hidden layer sizes as AxB.
    #[arg(long, default_value = "512x512")]
    hidden: String,

    /// Skip feature standardization for SVM/MLP.
    #[arg(long = "no-standardize")]
    no_standardize: bool,

    /// Stratify the train/test split by class.
    #[arg(long)]
    stratified: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled synthetic corpus (WAVs + manifest.csv).
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Master seed; echoed in output.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Equal class sizes instead of the default imbalanced mix.
        #[arg(long)]
        balanced: bool,
        /// Segments per class in balanced mode.
        #[arg(long = "per-class", default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
        per_class: u64,
        /// Explicit per-class counts `low,intermediate,high`.
        #[arg(long, conflicts_with_all = ["balanced", "per_class"])]
        counts: Option<String>,
    },

    /// Extract per-segment feature vectors from a manifest into a CSV.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        /// Output feature CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Mel-cepstral coefficients per frame.
        #[arg(long = "n-mfcc", default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        n_mfcc: u64,
        /// Append ZCR, RMSE and spectral flux (on by default).
        #[arg(long, overrides_with = "no_extras", default_value_t = true)]
        extras: bool,
        #[arg(long = "no-extras")]
        no_extras: bool,
        #[command(flatten)]
        bank: BankArgs,
        /// Also dump each segment's power spectrogram as a CSV matrix here.
        #[arg(long = "dump-spectrogram")]
        dump_spectrogram: Option<PathBuf>,
    },

    /// Train one model on the training part of a feature CSV.
    Train {
        /// Feature CSV from `extract`.
        #[arg(long)]
        features: PathBuf,
        /// svm, rf or mlp.
        #[arg(long)]
        model: String,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
        /// Training fraction of the split.
        #[arg(long, default_value_t = 0.7)]
        ratio: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        hyper: HyperArgs,
        /// Write the training log (per-epoch losses for the MLP) here.
        #[arg(long)]
        log: Option<PathBuf>,
    },

    /// Evaluate a trained model on the held-out split (or a separate CSV).
    Eval {
        /// Feature CSV the split is derived from.
        #[arg(long)]
        features: PathBuf,
        /// Model file from `train`.
        #[arg(long = "model-file")]
        model_file: PathBuf,
        /// Directory for confusion_<model>.csv.
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Score every row of this CSV instead of the held-out split.
        #[arg(long = "test-features")]
        test_features: Option<PathBuf>,
        #[arg(long, default_value_t = 0.7)]
        ratio: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        stratified: bool,
    },

    /// Accuracy for each model across a list of mel-coefficient counts.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Comma-separated mel counts, e.g. 5,10,12,20.
        #[arg(long, default_value = "5,10,12,20")]
        nmel: String,
        /// Comma-separated models, e.g. svm,rf,mlp.
        #[arg(long, default_value = "svm,rf,mlp")]
        models: String,
        #[arg(long, default_value_t = 0.7)]
        ratio: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Re-run with seeds seed..seed+k-1 and report every run.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        repeats: u64,
        #[command(flatten)]
        bank: BankArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },

    /// Baseline vs extras ablation at a fixed mel count.
    Compare {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Mel-cepstral coefficients of the baseline.
        #[arg(long = "n-mfcc", default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        n_mfcc: u64,
        #[arg(long, default_value = "svm,rf,mlp")]
        models: String,
        #[arg(long, default_value_t = 0.7)]
        ratio: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        repeats: u64,
        #[command(flatten)]
        bank: BankArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },
}

/// Usage problems clap cannot express (list parsing, cross-field rules).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(fluency_core::Error),
}

impl From<fluency_core::Error> for CliError {
    fn from(e: fluency_core::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    return ExitCode::SUCCESS;
                }
                _ => EXIT_USAGE,
            };
            eprint!("{e}");
            return ExitCode::from(code);
        }
    };

    if cli.jobs > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global()
        {
            eprintln!("fluency: failed to size the thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("fluency: usage error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("fluency: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
