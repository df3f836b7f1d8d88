//! Evaluation of causal reasoning in language models against Boolean
//! structural causal models.
//!
//! The pieces, bottom up:
//!
//! * [`scm`]: causal models, interventions and counterfactuals.
//! * [`problems`]: the built-in reasoning problems and their prompts.
//! * [`causation`]: datasets and PN/PS identification.
//! * [`llm`]: agents, prompting, response cache and answer parsing.
//! * [`metrics`]: inconsistency rates, bootstrap and overlap.

pub mod causation;
pub mod llm;
pub mod metrics;
pub mod problems;
pub mod scm;
pub mod seeding;
