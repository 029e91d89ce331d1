//! Command-line surface. Solver flags default to the parameter set used for
//! the Pavia University experiments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "hsfuse", version, about = "Hyperspectral/multispectral fusion toolbox")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Degrade a reference scene into an observation pair (LR-HSI, HR-MSI)
    Simulate(SimulateArgs),
    /// Fuse an observation pair into a high-resolution hyperspectral image
    Fuse(FuseArgs),
    /// Compare a fused image against its reference
    Metrics(MetricsArgs),
    /// Render the absolute error of one band as a PGM image
    Errormap(ErrormapArgs),
    /// Wrap a flat little-endian float64 file into the HST1 container
    ImportRaw(ImportRawArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Reference scene, HST1
    #[arg(long)]
    pub input: PathBuf,
    /// Blur kernel: "gaussian:<k>:<sigma>" or "delta"
    #[arg(long, default_value = "gaussian:7:2")]
    pub kernel: String,
    /// Spatial decimation factor
    #[arg(long, default_value_t = 4)]
    pub factor: usize,
    /// Spectral response CSV, one row per output band
    #[arg(long)]
    pub srf: PathBuf,
    /// HSI noise level in dB, or "none" for a noiseless observation
    #[arg(long, default_value = "20")]
    pub snr_hsi: String,
    /// MSI noise level in dB, or "none"
    #[arg(long, default_value = "25")]
    pub snr_msi: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path for the low-resolution HSI
    #[arg(long)]
    pub out_lr: PathBuf,
    /// Output path for the high-resolution MSI
    #[arg(long)]
    pub out_msi: PathBuf,
}

#[derive(Args, Debug)]
pub struct FuseArgs {
    /// Low-resolution HSI, HST1
    #[arg(long)]
    pub hsi: PathBuf,
    /// High-resolution MSI, HST1
    #[arg(long)]
    pub msi: PathBuf,
    /// Blur kernel: "gaussian:<k>:<sigma>" or "delta"
    #[arg(long, default_value = "gaussian:7:2")]
    pub kernel: String,
    /// Spatial decimation factor
    #[arg(long, default_value_t = 4)]
    pub factor: usize,
    /// Spectral response CSV
    #[arg(long)]
    pub srf: PathBuf,
    /// Subspace dimension
    #[arg(long = "L", default_value_t = 10)]
    pub l: usize,
    /// Cluster count
    #[arg(long = "N", default_value_t = 400)]
    pub n: usize,
    /// Patch side length
    #[arg(long, default_value_t = 4)]
    pub patch: usize,
    /// Regularization weights for the three gradient modes
    #[arg(long, default_value = "0.3,0.03,0.009")]
    pub alpha: String,
    /// ADMM penalty
    #[arg(long, default_value_t = 0.05)]
    pub mu: f64,
    /// Logarithm shift in the regularizer
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    /// Stop when the relative change of the coefficients falls below this
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Iteration cap
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Clustering seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path for the fused image
    #[arg(long)]
    pub out: PathBuf,
    /// Optional convergence log CSV
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Reference image, HST1
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Image under test, HST1
    #[arg(long = "test")]
    pub test: PathBuf,
    /// Decimation factor (enters the ERGAS normalization)
    #[arg(long, default_value_t = 4)]
    pub factor: usize,
    /// Output CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ErrormapArgs {
    /// Reference image, HST1
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Image under test, HST1
    #[arg(long = "test")]
    pub test: PathBuf,
    /// Band index, 0-based
    #[arg(long)]
    pub band: usize,
    /// Absolute-error range mapped to [0, 255], as "lo,hi"
    #[arg(long, default_value = "0,0.1")]
    pub range: String,
    /// Output PGM
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ImportRawArgs {
    /// Flat little-endian float64 file in Tensor3 linear order
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub i1: usize,
    #[arg(long)]
    pub i2: usize,
    #[arg(long)]
    pub i3: usize,
    /// Output HST1
    #[arg(long)]
    pub out: PathBuf,
}
