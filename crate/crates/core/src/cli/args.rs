use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "fastsvt", version, about = "Randomized truncated SVD and fast SVT matrix completion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Truncated SVD of a sparse matrix with one algorithm.
    Svd(SvdArgs),
    /// Matrix completion of ratings, an image, or a MatrixMarket matrix.
    Complete(CompleteArgs),
    /// Timing table over several SVD algorithm settings.
    Bench(BenchArgs),
    /// Generate synthetic matrices, ratings or images.
    Synth(SynthArgs),
    /// Compare a prediction file against ground truth.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvdAlgo {
    Basic,
    Pi,
    Bki,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompleteAlgo {
    Reference,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    Ratings,
    Image,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    Lowrank,
    Ratings,
    Image,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Flat,
    Decay,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvdArgs {
    /// TOML file with any of these options (snake_case keys); flags win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// MatrixMarket matrix, rating file, or PPM/PGM image.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Rating file format: csv, tsv or double-colon (detected when omitted).
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long, value_enum)]
    pub algo: Option<SvdAlgo>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest min(m, n) accepted by the dense oracle.
    #[arg(long)]
    pub oracle_cap: Option<usize>,
    /// Also time basic rSVD to report the speedup column.
    #[arg(long)]
    pub baseline: Option<bool>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompleteArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Input kind; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub kind: Option<DataKind>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long, value_enum)]
    pub algo: Option<CompleteAlgo>,
    /// SVD backend of the reference solver: oracle or rsvd-bki.
    #[arg(long)]
    pub backend: Option<String>,
    /// Default tolerance and strategy set: image, ratings or generic.
    #[arg(long)]
    pub workload: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub i_max: Option<usize>,
    #[arg(long)]
    pub i_reuse: Option<usize>,
    #[arg(long)]
    pub q_reuse: Option<usize>,
    /// Recycling strategy: none, reuse-q or reuse-u.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Initial power parameter.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub p_min: Option<usize>,
    #[arg(long)]
    pub adaptive_power: Option<bool>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub oracle_cap: Option<usize>,
    /// Fraction of ratings or matrix entries used for training.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Fraction of image pixels observed.
    #[arg(long)]
    pub pixel_fraction: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    /// Comma-separated `algo:p` entries, e.g. `basic:4,pi:4,bki:4`.
    #[arg(long, value_delimiter = ',')]
    pub runs: Option<Vec<String>>,
    /// Entry of `runs` the speedup column is relative to (default: the first).
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub oracle_cap: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<SynthKind>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, value_enum)]
    pub spectrum: Option<SpectrumKind>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    /// Gaussian noise level: relative for `lowrank`, per-pixel texture in 0..255 units for `image`.
    pub noise: Option<f64>,
    /// Multiplier of the low-rank spectrum (default `sqrt(m n)`, giving O(1) entries).
    #[arg(long)]
    pub scale: Option<f64>,
    /// Nonzeros per row of `--kind sparse`.
    #[arg(long)]
    pub per_row: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Ground truth: MatrixMarket, binary container, or PPM/PGM.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fills options missing on the command line from the TOML file at `config`.
pub fn merge_config<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Result<T> {
    let cfg_err = |msg: String| Error::InvalidParameter(msg);
    let Some(path) = config else {
        return Ok(flags_clone(flags)?);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg_err(format!("cannot read config {}: {e}", path.display())))?;
    let file: T = toml::from_str(&text).map_err(|e| cfg_err(format!("config {}: {e}", path.display())))?;
    let mut merged = serde_json::to_value(&file).map_err(|e| cfg_err(e.to_string()))?;
    let overlay = serde_json::to_value(flags).map_err(|e| cfg_err(e.to_string()))?;
    if let (Value::Object(base), Value::Object(top)) = (&mut merged, overlay) {
        for (key, value) in top {
            if !value.is_null() {
                base.insert(key, value);
            }
        }
    }
    serde_json::from_value(merged).map_err(|e| cfg_err(e.to_string()))
}

fn flags_clone<T: Serialize + DeserializeOwned>(flags: &T) -> Result<T> {
    serde_json::to_value(flags)
        .and_then(serde_json::from_value)
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "k = 7\np = 2\nalgo = \"pi\"\n").unwrap();
        let flags = SvdArgs {
            p: Some(5),
            ..Default::default()
        };
        let merged = merge_config(&flags, Some(&path)).unwrap();
        assert_eq!((merged.k, merged.p, merged.algo), (Some(7), Some(5), Some(SvdAlgo::Pi)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "k = 7\nbogus = 1\n").unwrap();
        let err = merge_config(&SvdArgs::default(), Some(&path)).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }
}
