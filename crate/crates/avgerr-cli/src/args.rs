//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::report::Format;

#[derive(Parser)]
#[command(
    name = "avgerr",
    version,
    about = "Averaging-error estimation for stationary time series",
    long_about = "Quantifies the expected squared error of finite-time averages: \
                  series generation (AR and Kuramoto-Sivashinsky energy), initial-transient \
                  detection, the multiscale error estimator with an MLE-AR baseline, ensemble \
                  benchmarks, and exact/reference error curves.\n\n\
                  Set AVGERR_LOG=info (or debug) for progress logging."
)]
pub struct Cli {
    /// Master RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for ensemble commands (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// Output path; stdout when omitted. Written atomically (temp + rename).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Report/table format. Defaults: json for reports, csv for tables.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

/// Global flags, resolved once in main.
pub struct Global {
    pub seed: Option<u64>,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Simulate a series and write it as a series file.
    #[command(subcommand)]
    Generate(GenerateKind),

    /// Locate the initial transient of a series.
    DetectTransient(DetectArgs),

    /// Estimate the expected squared averaging error of a series.
    Estimate(EstimateArgs),

    /// Ensemble study: estimators vs the exact error curve across lengths.
    #[command(subcommand)]
    Benchmark(BenchmarkKind),

    /// Exact (AR) or long-run reference (KS) averaging-error curves.
    #[command(subcommand)]
    Truth(TruthKind),
}

#[derive(Subcommand)]
pub enum GenerateKind {
    /// Autoregressive process.
    Ar(GenerateArArgs),
    /// Kuramoto-Sivashinsky energy signal.
    Ks(GenerateKsArgs),
}

#[derive(Args)]
pub struct GenerateArArgs {
    /// Named model: paper-ar6 | white-noise.
    #[arg(long)]
    pub preset: Option<String>,

    /// AR coefficients a1,a2,... (ignored when --preset is given).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,

    /// Innovation variance (default 1; paper-ar6 preset uses 0.1).
    #[arg(long)]
    pub noise_variance: Option<f64>,

    /// Process mean (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,

    /// Number of samples (default 16384).
    #[arg(long)]
    pub n: Option<usize>,

    /// Value filling the pre-sample lags (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<f64>,

    /// Config file (key=value lines or a JSON object) supplying any of the
    /// above; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Write the raw binary series format instead of text.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Args)]
pub struct GenerateKsArgs {
    /// Time steps to integrate (default 20000).
    #[arg(long)]
    pub steps: Option<usize>,

    /// Steps between recorded energy samples (default 1).
    #[arg(long)]
    pub stride: Option<usize>,

    /// Periodic domain length (default 200).
    #[arg(long)]
    pub domain_length: Option<f64>,

    /// Fourier modes / grid points; power of two (default 512).
    #[arg(long)]
    pub n_modes: Option<usize>,

    /// Time step (default 0.2).
    #[arg(long)]
    pub dt: Option<f64>,

    /// Config file (key=value lines or a JSON object); explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Write the raw binary series format instead of text.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Args)]
pub struct DetectArgs {
    /// Input series file.
    pub input: PathBuf,

    /// Write the full objective curve J(k) as CSV here.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EstimateArgs {
    /// Input series file.
    pub input: PathBuf,

    /// Number of exponential modes in the autocorrelation model.
    #[arg(long, default_value_t = 3)]
    pub m: usize,

    /// Use the whole series; skip transient detection and removal.
    #[arg(long)]
    pub skip_transient: bool,

    /// Also fit a maximum-likelihood AR baseline on the same tail (e.g. ar:3).
    #[arg(long)]
    pub baseline: Option<String>,

    /// Multistart count for the fit (default 8).
    #[arg(long)]
    pub n_starts: Option<usize>,

    /// Feasibility tolerance on the largest-scale equality residual.
    #[arg(long)]
    pub tol_eq: Option<f64>,

    /// Distance of the rate upper bound from 1 (default scales with the
    /// profile length).
    #[arg(long)]
    pub tau_ceiling_delta: Option<f64>,

    /// Outer (multiplier-update) iteration cap (default 50).
    #[arg(long)]
    pub max_outer: Option<usize>,

    /// Inner (quasi-Newton) iteration cap (default 500).
    #[arg(long)]
    pub max_inner: Option<usize>,
}

#[derive(Subcommand)]
pub enum BenchmarkKind {
    /// Autoregressive ensembles with an exact truth curve.
    Ar(BenchmarkArArgs),
}

#[derive(Args)]
pub struct BenchmarkArArgs {
    /// Realization lengths: "a..b" doubles from a to b, or a comma list.
    #[arg(long, default_value = "128..16384")]
    pub n_grid: String,

    /// Ensemble members per length.
    #[arg(long, default_value_t = 30)]
    pub ensemble: usize,

    /// Modes in the multiscale fit.
    #[arg(long, default_value_t = 3)]
    pub m: usize,

    /// Order of the MLE-AR baseline.
    #[arg(long, default_value_t = 3)]
    pub baseline_order: usize,

    /// Named model (default paper-ar6).
    #[arg(long)]
    pub preset: Option<String>,

    /// Custom AR coefficients instead of a preset.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,

    /// Innovation variance for custom coefficients.
    #[arg(long)]
    pub noise_variance: Option<f64>,
}

#[derive(Subcommand)]
pub enum TruthKind {
    /// Exact curve from the model's Yule-Walker statistics.
    Ar(TruthArArgs),
    /// Reference curve from a long Kuramoto-Sivashinsky run.
    Ks(TruthKsArgs),
}

#[derive(Args)]
pub struct TruthArArgs {
    /// Named model (default paper-ar6): paper-ar6 | white-noise.
    #[arg(long)]
    pub preset: Option<String>,

    /// Custom AR coefficients instead of a preset.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,

    /// Innovation variance for custom coefficients.
    #[arg(long)]
    pub noise_variance: Option<f64>,

    /// Process mean.
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,

    /// Largest averaging length in the curve.
    #[arg(long, default_value_t = 16384)]
    pub s_max: usize,

    /// Every s from 1 to s-max instead of powers of two.
    #[arg(long)]
    pub dense: bool,
}

#[derive(Args)]
pub struct TruthKsArgs {
    /// Reference-run length multiplier over --steps.
    #[arg(long, default_value_t = 100)]
    pub multiplier: usize,

    /// Base step count the multiplier applies to (default 20000).
    #[arg(long)]
    pub steps: Option<usize>,

    /// Steps between recorded energy samples (default 1).
    #[arg(long)]
    pub stride: Option<usize>,

    /// Periodic domain length (default 200).
    #[arg(long)]
    pub domain_length: Option<f64>,

    /// Fourier modes / grid points; power of two (default 512).
    #[arg(long)]
    pub n_modes: Option<usize>,

    /// Time step (default 0.2).
    #[arg(long)]
    pub dt: Option<f64>,

    /// Config file (key=value lines or a JSON object); explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Largest averaging length in the curve.
    #[arg(long, default_value_t = 8192)]
    pub s_max: usize,
}
