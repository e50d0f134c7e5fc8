use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::LazyLock;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use sfk_core::{ErrorKind, BINNING_CONVENTION};

mod commands;

static VERSION: LazyLock<String> = LazyLock::new(|| {
    format!(
        "{} (binning: {BINNING_CONVENTION})",
        env!("CARGO_PKG_VERSION")
    )
});

/// Fourier-spectrum forensics toolkit.
#[derive(Debug, Parser)]
#[command(name = "sfk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reduced spectra of one image or a folder, as CSV.
    Spectrum(SpectrumArgs),
    /// Surrogate generated images from an X.Y.Z last-layer configuration.
    Simulate(SimulateArgs),
    /// Per-image feature rows for a folder of images.
    Extract(ExtractArgs),
    /// Train detectors and report detection rates per fake setup.
    Detect(DetectArgs),
    /// Write a corpus manifest (ids, sizes, content hashes).
    Manifest(ManifestArgs),
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Image file or directory of images.
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV; a directory when INPUT is a directory and --aggregate is off.
    #[arg(long)]
    pub out: PathBuf,
    /// Divide every bin by the DC bin.
    #[arg(long)]
    pub normalize: bool,
    /// Write one mean/std CSV over all images.
    #[arg(long)]
    pub aggregate: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Experiment code such as N.1.5, B.3.5 or Z.1.7.
    #[arg(long)]
    pub config: String,
    #[arg(long)]
    pub out: PathBuf,
    /// identity, box, gaussian or gaussian:<sigma>.
    #[arg(long, default_value = "gaussian:1")]
    pub kernel: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LabelArg {
    Real,
    Fake,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Decay3,
    Fullspec,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub label: LabelArg,
    #[arg(long, value_enum, default_value = "decay3")]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClassifierArg {
    Knn,
    Mlp,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Feature CSV of real images.
    #[arg(long)]
    pub real: PathBuf,
    /// Feature CSV of the fakes the detector is trained on.
    #[arg(long)]
    pub fake_train: PathBuf,
    /// Feature CSVs of the fake setups to test; the file stem names the setup.
    #[arg(long, num_args = 1.., required = true)]
    pub fake_test: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "knn")]
    pub classifier: ClassifierArg,
    #[arg(long, default_value_t = 0.10)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Neighbours for the KNN detector (odd).
    #[arg(long, default_value_t = sfk_core::detect::DEFAULT_K)]
    pub k: usize,
    /// Feed raw, unstandardized features to KNN.
    #[arg(long)]
    pub raw_features: bool,
    /// MLP learning rate.
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// MLP full-batch epochs.
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub label: LabelArg,
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Validation => 1,
        ErrorKind::Io => 2,
        ErrorKind::Degenerate => 3,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("SFK_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("SFK_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let matches = match Cli::command().version(VERSION.as_str()).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind as Clap;
            if matches!(e.kind(), Clap::DisplayHelp | Clap::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => {
            eprintln!(
                "{}",
                e.to_string().lines().next().unwrap_or("invalid arguments")
            );
            return ExitCode::from(1);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }

    let result = match cli.command {
        Command::Spectrum(args) => commands::spectrum(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Extract(args) => commands::extract(&args),
        Command::Detect(args) => commands::detect(&args),
        Command::Manifest(args) => commands::manifest(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
