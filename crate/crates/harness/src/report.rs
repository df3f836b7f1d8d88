//! JSON documents written by the subcommands. Each carries
//! `schema_version`; readers reject versions they do not know.

use std::path::Path;

use causeval_core::causation::{CausationEstimate, ContingencyTable};
use causeval_core::llm::{Concretization, PromptKind, UnparseableCounts};
use causeval_core::metrics::{BootstrapDensity, ErrorMatrix, OverlapCurve, RateReport};
use causeval_core::problems::DomainOverrides;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{HarnessError, RunConfig, TruthReference};

pub const SCHEMA_VERSION: u64 = 1;

/// Ground truth for one problem, as written by `truth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub schema_version: u64,
    pub problem: String,
    pub domain: DomainOverrides,
    pub exogenous: Vec<String>,
    pub treatment: String,
    pub outcome: String,
    pub instances: usize,
    pub monotone: bool,
    pub contingency: ContingencyTable,
    /// Identification formula on the exact datasets.
    pub estimate: CausationEstimate,
    /// Counterfactual definitions evaluated on the model.
    pub oracle_pn: f64,
    pub oracle_ps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

/// Written by `query` next to the answer tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySummary {
    pub schema_version: u64,
    pub problem: String,
    pub agent: String,
    pub replicates: usize,
    pub instances: usize,
    pub concretization: Concretization,
    pub unparseable: UnparseableCounts,
    pub all_unparseable: Vec<(u64, PromptKind)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueValues {
    pub pn: f64,
    pub ps: f64,
    pub pns: f64,
    pub oracle_pn: f64,
    pub oracle_ps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualRates {
    pub do_true: RateReport,
    pub do_false: RateReport,
    pub pooled: RateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u64,
    pub problem: String,
    pub agent: String,
    pub instances: usize,
    pub replicates: usize,
    pub monotone: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
    pub truth: TrueValues,
    /// `None` when a denominator is zero; see `notes`.
    pub estimate: Option<CausationEstimate>,
    pub fir: Option<RateReport>,
    pub cir: Option<CounterfactualRates>,
    pub unparseable: UnparseableCounts,
    pub bootstrap: Option<BootstrapDensity>,
    pub overlap_truth: TruthReference,
    pub overlap: Option<OverlapCurve>,
    pub error_matrix: Option<ErrorMatrix>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub min: f64,
    pub p05: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevelReport {
    pub flip_prob: f64,
    pub density_file: String,
    pub cir: RateReport,
    pub estimate: Option<CausationEstimate>,
    pub pn_dropped: usize,
    pub ps_dropped: usize,
    pub pn: Option<SampleSummary>,
    pub ps: Option<SampleSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub schema_version: u64,
    pub problem: String,
    pub truth: TrueValues,
    pub monotone: bool,
    pub replicates: usize,
    pub bootstrap: usize,
    pub levels: Vec<NoiseLevelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub config: RunConfig,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(HarnessError::io(parent))?;
    }
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| HarnessError::format(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(HarnessError::io(path))
}

/// Reads a versioned document, checking `schema_version` before the rest.
pub fn read_json<T: DeserializeOwned>(
    path: &Path,
    command: &'static str,
) -> Result<T, HarnessError> {
    if !path.exists() {
        return Err(HarnessError::MissingInput {
            path: path.to_path_buf(),
            command,
        });
    }
    let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::format(path, e))?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| HarnessError::format(path, "missing schema_version"))?;
    if found != SCHEMA_VERSION {
        return Err(HarnessError::Schema {
            path: path.to_path_buf(),
            found,
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| HarnessError::format(path, e))
}
