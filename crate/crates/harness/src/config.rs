//! Run configuration, read from a TOML file and command-line overrides.

use std::path::{Path, PathBuf};

use causeval_core::llm::{AgentSpec, Concretization, RemoteSpec};
use causeval_core::metrics::{BootstrapScheme, GammaGrid, DEFAULT_BOOTSTRAP, DEFAULT_FLIP_PROBS};
use causeval_core::problems::{DomainOverrides, Problem, ProblemKind};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Which true PN/PS the overlap curves are measured against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthReference {
    /// The identification formula on exact datasets.
    #[default]
    Estimate,
    /// The counterfactual definitions, evaluated on the model.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_max: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_candies: Option<i64>,
    /// Required: every random draw in a run derives from it.
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub bootstrap_scheme: BootstrapScheme,
    #[serde(default = "default_gamma_step")]
    pub gamma_step: f64,
    /// Explicit gamma grid; replaces `gamma_step` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default = "default_flip_probs")]
    pub flip_probs: Vec<f64>,
    #[serde(default)]
    pub overlap_truth: TruthReference,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Defaults to `<out_dir>/cache.jsonl`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub concretization: Concretization,
    /// Endpoint used when `concretization = "extractor"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractor: Option<RemoteSpec>,
    /// Off by default so that reports are byte-identical across reruns.
    #[serde(default)]
    pub record_timestamps: bool,
    #[serde(default = "default_agent")]
    pub agent: AgentSpec,
}

fn default_replicates() -> usize {
    10
}

fn default_bootstrap() -> usize {
    DEFAULT_BOOTSTRAP
}

fn default_gamma_step() -> f64 {
    0.01
}

fn default_flip_probs() -> Vec<f64> {
    DEFAULT_FLIP_PROBS.to_vec()
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_concurrency() -> usize {
    4
}

fn default_agent() -> AgentSpec {
    AgentSpec::Perfect
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub problem: Option<String>,
    pub agent: Option<AgentSpec>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Reads `path` (if any), applies `overrides`, and validates the result.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, HarnessError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(HarnessError::io(p))?;
                text.parse::<toml::Table>()
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        let cfg_err = |e: toml::ser::Error| HarnessError::Config(e.to_string());
        if let Some(problem) = &overrides.problem {
            table.insert("problem".into(), problem.clone().into());
        }
        if let Some(seed) = overrides.seed {
            let seed = i64::try_from(seed)
                .map_err(|_| HarnessError::Config(format!("seed {seed} exceeds {}", i64::MAX)))?;
            table.insert("seed".into(), seed.into());
        }
        if let Some(out) = &overrides.out {
            table.insert("out_dir".into(), out.display().to_string().into());
        }
        if let Some(agent) = &overrides.agent {
            table.insert(
                "agent".into(),
                toml::Value::try_from(agent).map_err(cfg_err)?,
            );
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.problem()?;
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.bootstrap == 0 {
            return bad("bootstrap must be at least 1".into());
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1".into());
        }
        self.grid()?;
        if self.flip_probs.is_empty() {
            return bad("flip_probs must not be empty".into());
        }
        if let Some(p) = self.flip_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("flip probability {p} is outside [0, 1]"));
        }
        self.agent.validate()?;
        if self.concretization == Concretization::Extractor && self.extractor.is_none() {
            return bad("concretization = \"extractor\" needs an [extractor] table".into());
        }
        Ok(())
    }

    pub fn domain(&self) -> DomainOverrides {
        DomainOverrides {
            range_max: self.range_max,
            total_candies: self.total_candies,
        }
    }

    pub fn problem(&self) -> Result<Problem, HarnessError> {
        let kind: ProblemKind = self.problem.parse()?;
        Ok(Problem::build(kind, self.domain())?)
    }

    pub fn grid(&self) -> Result<GammaGrid, HarnessError> {
        let grid = match &self.gamma {
            Some(values) => GammaGrid::new(values.clone()),
            None => GammaGrid::uniform(self.gamma_step),
        };
        grid.map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache_path
            .clone()
            .unwrap_or_else(|| self.out_dir.join("cache.jsonl"))
    }
}
