use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgAction, Args, Parser, Subcommand};
use wavkan::data::Regime;
use wavkan::kan::ModelKind;
use wavkan::WaveletFamily;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "wavkan", version, about = "Train and inspect wavelet Kolmogorov-Arnold networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a network and write metrics.csv plus one checkpoint per trial.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Check the zero-mean and admissibility criteria of mother wavelets.
    WaveletCheck(WaveletCheckArgs),
    /// Haar decomposition of a signal: detail energies and round-trip error.
    DwtDemo(DwtDemoArgs),
    /// Count learnable and non-learnable parameters of a layout.
    ParamCount(ParamCountArgs),
    /// Sample one learned edge function of a checkpoint as CSV.
    ExportActivations(ExportArgs),
}

/// Layer widths, written `784,32,10`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout(pub Vec<usize>);

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let widths = s
            .split(',')
            .map(|w| w.trim().parse::<usize>().map_err(|e| format!("bad width '{w}': {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if widths.len() < 2 || widths.contains(&0) {
            return Err(format!("layout '{s}' needs at least two positive widths"));
        }
        Ok(Layout(widths))
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// `mnist` or one of the synthetic regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetChoice {
    Mnist,
    Synthetic(Regime),
}

impl FromStr for DatasetChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "mnist" {
            return Ok(DatasetChoice::Mnist);
        }
        s.parse::<Regime>()
            .map(DatasetChoice::Synthetic)
            .map_err(|_| format!("unknown dataset '{s}' (expected mnist, two_blobs, rings or checker)"))
    }
}

impl fmt::Display for DatasetChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetChoice::Mnist => f.write_str("mnist"),
            DatasetChoice::Synthetic(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// mnist, two_blobs, rings or checker [default: mnist]
    #[arg(long)]
    pub dataset: Option<DatasetChoice>,
    /// Directory holding the four MNIST IDX files [default: data/mnist]
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Samples per split for synthetic datasets [default: 512]
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Plain-text key=value file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// wavkan or mlp [default: wavkan]
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// mexican_hat, morlet, dog or shannon [default: mexican_hat]
    #[arg(long)]
    pub wavelet: Option<WaveletFamily>,
    /// Morlet centre frequency [default: 5]
    #[arg(long, allow_negative_numbers = true)]
    pub omega0: Option<f64>,
    /// [default: 784,32,10 for mnist, 4,8,2 for synthetic sets]
    #[arg(long)]
    pub layout: Option<Layout>,
    /// [default: 50]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 5]
    #[arg(long)]
    pub trials: Option<usize>,
    /// [default: 128]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// [default: 0.001]
    #[arg(long, allow_negative_numbers = true)]
    pub lr: Option<f64>,
    /// [default: 0.0001]
    #[arg(long, allow_negative_numbers = true)]
    pub weight_decay: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Batch norm in front of every layer [default: true]
    #[arg(long, action = ArgAction::Set)]
    pub batchnorm: Option<bool>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Output directory [default: runs]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also train the MLP baseline under the same settings and write
    /// comparison.csv.
    #[arg(long)]
    pub compare_mlp: bool,
    /// Resolve and validate the configuration, print it, and stop.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Seed of synthetic datasets [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct WaveletCheckArgs {
    /// Single wavelet to check.
    #[arg(long, conflicts_with = "all")]
    pub wavelet: Option<WaveletFamily>,
    /// Check all four wavelets (the default when --wavelet is absent).
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = wavkan::wavelets::DEFAULT_OMEGA0, allow_negative_numbers = true)]
    pub omega0: f64,
    /// Half-width T of the quadrature domain [−T, T].
    #[arg(long, default_value_t = 12.0)]
    pub halfwidth: f64,
    #[arg(long, default_value_t = 8192)]
    pub points: usize,
    /// Also write the report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DwtDemoArgs {
    /// File with one real per line; its length must be a power of two.
    #[arg(long, conflicts_with = "demo")]
    pub signal: Option<PathBuf>,
    /// Built-in signal: chirp, constant or step.
    #[arg(long, default_value = "chirp")]
    pub demo: String,
    /// Length of the built-in signal.
    #[arg(long, default_value_t = 256)]
    pub length: usize,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
}

#[derive(Args, Debug)]
pub struct ParamCountArgs {
    #[arg(long, default_value = "wavkan")]
    pub model: ModelKind,
    #[arg(long, default_value = "784,32,10")]
    pub layout: Layout,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub batchnorm: bool,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Layer index, counted from the input.
    #[arg(long, default_value_t = 0)]
    pub layer: usize,
    /// Edge destination node i.
    #[arg(long, default_value_t = 0)]
    pub out_node: usize,
    /// Edge source node j.
    #[arg(long, default_value_t = 0)]
    pub in_node: usize,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    pub tmin: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub tmax: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Keys accepted in a `--config` file, spelled like the flags.
pub const CONFIG_KEYS: [&str; 15] = [
    "model",
    "wavelet",
    "omega0",
    "layout",
    "epochs",
    "trials",
    "batch-size",
    "lr",
    "weight-decay",
    "seed",
    "batchnorm",
    "dataset",
    "data-dir",
    "samples",
    "out",
];

/// Values from a `key=value` file. Blank lines and `#` comments are skipped;
/// underscores in keys are read as dashes.
#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
            let key = key.trim().replace('_', "-");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key '{key}'", n + 1)));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    /// Flag value if given, else the file's value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))),
        }
    }
}
