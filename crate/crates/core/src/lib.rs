//! Distribution-level metrics for generative models computed on embedding sets:
//! Fréchet distance (FID, FID-infinity), unbiased MMD and CMMD, multivariate
//! normality tests, and the synthetic experiments that compare them.

mod blockwise;
pub mod embedding;
pub mod error;
pub mod experiments;
pub mod frechet;
pub mod linalg;
pub mod manifest;
pub mod mmd;
pub mod mog;
pub mod normality;
pub mod npy;
pub mod report;
pub mod rng;
pub mod stats;

pub use embedding::{subsample, EmbeddingSet};
pub use error::{MetricsError, Result};
pub use frechet::{fid, fid_infinity, frechet_gaussian, ExtrapolationConfig, FidInfinity, FrechetResult};
pub use linalg::Matrix;
pub use manifest::{Manifest, ManifestEntry};
pub use mmd::{cmmd, mmd_unbiased, KernelConfig, MmdReference, MmdResult};
pub use mog::{MoGConfig, MixtureRow};
pub use normality::{normality_report, NormalityReport};
pub use npy::{read_array, write_array, Dtype};
pub use report::{MetricReport, Report};
pub use stats::{estimate_stats, Divisor, GaussianStats};
