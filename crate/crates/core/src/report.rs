//! Machine-readable reports: one JSON object per line, tagged by `kind`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiments::{BenchReport, SampleEfficiencyRow};
use crate::frechet::{ExtrapolationConfig, ExtrapolationPoint};
use crate::mmd::KernelConfig;
use crate::mog::MixtureRow;
use crate::normality::NormalityReport;
use crate::stats::Divisor;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parameters that determine a metric value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divisor: Option<Divisor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolation: Option<ExtrapolationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    pub config: MetricConfig,
    pub ref_path: String,
    pub gen_path: String,
    pub n_ref: usize,
    pub n_gen: usize,
    pub d: usize,
    pub wall_time_ms: f64,
    pub tool_version: String,
    /// FID-infinity fit: subset sizes with their FID values.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<ExtrapolationPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityFileReport {
    pub path: String,
    #[serde(flatten)]
    pub report: NormalityReport,
    pub wall_time_ms: f64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MogReport {
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
    pub kernel: KernelConfig,
    pub rows: Vec<MixtureRow>,
    pub wall_time_ms: f64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEfficiencyReport {
    pub ref_path: String,
    pub gen_path: String,
    pub kernel: KernelConfig,
    pub divisor: Divisor,
    pub rows: Vec<SampleEfficiencyRow>,
    pub wall_time_ms: f64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchFileReport {
    #[serde(flatten)]
    pub bench: BenchReport,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Report {
    Metric(MetricReport),
    Normality(NormalityFileReport),
    Mog(MogReport),
    SampleEfficiency(SampleEfficiencyReport),
    Bench(BenchFileReport),
}

impl Report {
    /// Single-line JSON.
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn parse(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line.trim())?)
    }
}

/// Parses every non-empty line of `text` as a report.
pub fn read_reports(text: &str) -> Result<Vec<Report>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(Report::parse).collect()
}
