use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use genmetrics_core::mmd::{CMMD_SCALE, CMMD_SIGMA, DEFAULT_BLOCK_SIZE};
use genmetrics_core::mog::DEFAULT_LAMBDAS;
use genmetrics_core::{Divisor, KernelConfig};

#[derive(Debug, Parser)]
#[command(name = "genmetrics", version, about = "Distribution distances and normality tests for embedding sets")]
pub struct Cli {
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance between a reference and a generated embedding file (.npy).
    Compute(ComputeArgs),
    /// Mardia skewness/kurtosis and Henze-Zirkler tests on one embedding file.
    Normality(NormalityArgs),
    /// Fréchet distances and MMD between N(0, σ²I) and a covariance-matched
    /// four-component mixture, one CSV row per λ.
    Mog(MogArgs),
    /// FID and CMMD on random subsets of the generated set.
    SampleEfficiency(SampleEfficiencyArgs),
    /// Wall time of the Fréchet distance against MMD on synthetic data.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Fid,
    FidInf,
    Mmd,
    Cmmd,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Fid => "fid",
            Metric::FidInf => "fid-inf",
            Metric::Mmd => "mmd",
            Metric::Cmmd => "cmmd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum DivisorArg {
    #[default]
    Unbiased,
    Biased,
}

impl From<DivisorArg> for Divisor {
    fn from(d: DivisorArg) -> Self {
        match d {
            DivisorArg::Unbiased => Divisor::Unbiased,
            DivisorArg::Biased => Divisor::Biased,
        }
    }
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// RBF bandwidth.
    #[arg(long, default_value_t = CMMD_SIGMA)]
    pub sigma: f64,
    /// Multiplier applied to the raw estimate.
    #[arg(long, default_value_t = CMMD_SCALE)]
    pub scale: f64,
    /// Use rows as given (default for cmmd is to L2-normalize them).
    #[arg(long, conflicts_with = "l2_normalize")]
    pub no_l2_normalize: bool,
    /// L2-normalize rows (default for mmd is to leave them as given).
    #[arg(long)]
    pub l2_normalize: bool,
    /// Rows per Gram tile.
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    pub block_size: usize,
}

impl KernelArgs {
    pub fn config(&self, l2_default: bool) -> KernelConfig {
        let l2 = if self.l2_normalize {
            true
        } else if self.no_l2_normalize {
            false
        } else {
            l2_default
        };
        KernelConfig {
            bandwidth_sigma: self.sigma,
            output_scale: self.scale,
            l2_normalize: l2,
            block_size: self.block_size,
        }
    }
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    pub metric: Metric,
    pub reference: PathBuf,
    pub generated: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, value_enum, default_value_t)]
    pub divisor: DivisorArg,
    /// Subsampling seed for fid-inf.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of subset sizes in the fid-inf fit.
    #[arg(long, default_value_t = 15)]
    pub points: usize,
    /// Smallest fid-inf subset size (halved set size below 10000 rows).
    #[arg(long, default_value_t = 5000)]
    pub min_size: usize,
    /// Print a single-line JSON report instead of the plain result.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct NormalityArgs {
    pub file: PathBuf,
    /// Significance level for the accept/reject decisions.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct MogArgs {
    /// Standard deviation of the reference Gaussian.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Comma-separated component offsets; each must satisfy λ ≤ σ√2.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDAS.to_vec())]
    pub lambdas: Vec<f64>,
    /// Samples per distribution.
    #[arg(long, default_value_t = 50_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// RBF bandwidth for the MMD column.
    #[arg(long, default_value_t = 1.0)]
    pub kernel_sigma: f64,
    #[arg(long, default_value_t = CMMD_SCALE)]
    pub scale: f64,
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    pub block_size: usize,
    #[arg(long)]
    pub json: bool,
}

impl MogArgs {
    pub fn kernel(&self) -> KernelConfig {
        KernelConfig::raw(self.kernel_sigma)
            .with_scale(self.scale)
            .with_block_size(self.block_size)
    }
}

#[derive(Debug, Args)]
pub struct SampleEfficiencyArgs {
    pub reference: PathBuf,
    pub generated: PathBuf,
    /// Comma-separated subset sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Comma-separated subsampling seeds.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0u64])]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, value_enum, default_value_t)]
    pub divisor: DivisorArg,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, default_value_t = 2048)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, value_enum, default_value_t)]
    pub divisor: DivisorArg,
    #[arg(long)]
    pub json: bool,
}
