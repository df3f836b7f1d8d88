//! Prompting answer agents and turning their answers into datasets.
//!
//! An agent is either a remote chat-completion endpoint or one of two local
//! mocks: a perfect reasoner that always answers with the causal model's
//! value, and a noisy reasoner that flips that value with fixed
//! probabilities. Remote answers go through an append-only [`ResponseCache`]
//! so reruns never repeat a request.

mod agent;
mod cache;
mod collect;
mod concretize;
mod prompt;
mod remote;

pub use agent::{Agent, AgentSpec, PromptKind, Query, RemoteSpec};
pub use cache::{cache_key, CacheEntry, ResponseCache};
pub use collect::{collect, AnswerRecord, CollectOptions, Collection, UnparseableCounts};
pub use concretize::{
    concretize, concretize_lexical, extractor_prompt, Concretization, ConcretizationMethod,
};
pub use prompt::PromptTemplate;
pub use remote::{RemoteClient, RetryPolicy, ENV_API_BASE, ENV_API_KEY, ENV_MODEL};

use thiserror::Error;

use crate::causation::CausationError;
use crate::problems::Problem;
use crate::scm::ScmError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("malformed prompt template: {0}")]
    Template(String),
    #[error("no value for template slot `{0}`")]
    MissingSlot(String),
    #[error("invalid agent: {0}")]
    InvalidAgent(String),
    #[error("missing credentials: set {0}")]
    MissingCredentials(&'static str),
    #[error("endpoint rejected credentials (HTTP {0})")]
    Auth(u16),
    #[error("endpoint returned HTTP {status} after {attempts} attempt(s)")]
    Http { status: u16, attempts: u32 },
    #[error("request failed after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("malformed endpoint response: {0}")]
    BadResponse(String),
    #[error("response cache: {0}")]
    Cache(String),
    #[error("extractor concretization needs a remote extractor agent")]
    NoExtractor,
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Causation(#[from] CausationError),
}

/// Direct prompt for one instance.
pub fn render_factual(problem: &Problem, point: &[i64]) -> Result<String, LlmError> {
    problem.model.check_point(point)?;
    problem
        .factual_template
        .render(&problem.slot_values(point), None)
}

/// Counterfactual prompt asking the agent to assume `treatment = forced`.
pub fn render_counterfactual(
    problem: &Problem,
    point: &[i64],
    forced: bool,
) -> Result<String, LlmError> {
    problem.model.check_point(point)?;
    problem
        .counterfactual_template
        .render(&problem.slot_values(point), Some(forced))
}
