use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cache::{cache_key, CacheEntry, ResponseCache};
use super::remote::RemoteClient;
use super::LlmError;
use crate::seeding::rng_for;

/// Which of the three questions asked per instance a prompt encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    Factual,
    CounterfactualTrue,
    CounterfactualFalse,
}

impl PromptKind {
    pub const ALL: [PromptKind; 3] = [
        PromptKind::Factual,
        PromptKind::CounterfactualTrue,
        PromptKind::CounterfactualFalse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Factual => "factual",
            PromptKind::CounterfactualTrue => "counterfactual-true",
            PromptKind::CounterfactualFalse => "counterfactual-false",
        }
    }

    pub fn is_counterfactual(self) -> bool {
        self != PromptKind::Factual
    }

    fn ordinal(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One question put to an agent.
///
/// `truth` is the causal model's answer. Remote agents never see it; the
/// mock agents answer from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub instance_id: u64,
    pub kind: PromptKind,
    pub prompt: String,
    pub truth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteSpec {
    /// Base address; requests go to `{endpoint}/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// `None` leaves the endpoint default.
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AgentSpec {
    Perfect,
    Noisy {
        #[serde(default)]
        p_factual: f64,
        #[serde(default)]
        p_counterfactual: f64,
        #[serde(default)]
        seed: u64,
    },
    Remote(RemoteSpec),
}

impl AgentSpec {
    pub fn validate(&self) -> Result<(), LlmError> {
        match self {
            AgentSpec::Perfect => Ok(()),
            AgentSpec::Noisy {
                p_factual,
                p_counterfactual,
                ..
            } => {
                for (name, p) in [
                    ("p_factual", p_factual),
                    ("p_counterfactual", p_counterfactual),
                ] {
                    if !(0.0..=1.0).contains(p) {
                        return Err(LlmError::InvalidAgent(format!(
                            "{name} = {p} not in [0, 1]"
                        )));
                    }
                }
                Ok(())
            }
            AgentSpec::Remote(r) => {
                if r.temperature.is_some_and(|t| t.is_nan() || t < 0.0) {
                    return Err(LlmError::InvalidAgent("temperature must be >= 0".into()));
                }
                if r.endpoint.is_empty() || r.model.is_empty() {
                    return Err(LlmError::InvalidAgent(
                        "remote agent needs an endpoint and a model".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Stable identity used in cache keys and reports.
    pub fn identity(&self) -> String {
        match self {
            AgentSpec::Perfect => "perfect".into(),
            AgentSpec::Noisy {
                p_factual,
                p_counterfactual,
                seed,
            } => format!("noisy:{p_factual}:{p_counterfactual}:{seed}"),
            AgentSpec::Remote(r) => format!("remote:{}:{}", r.endpoint, r.model),
        }
    }

    pub fn temperature(&self) -> Option<f64> {
        match self {
            AgentSpec::Remote(r) => r.temperature,
            _ => None,
        }
    }
}

/// Short command-line form: `perfect`, `noisy:<p_f>:<p_cf>[:<seed>]`, or
/// `remote:<model>[@<endpoint>]` (endpoint defaults to the environment).
impl FromStr for AgentSpec {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LlmError::InvalidAgent(format!("cannot parse agent `{s}`"));
        let mut parts = s.splitn(2, ':');
        let spec = match (parts.next(), parts.next()) {
            (Some("perfect"), None) => AgentSpec::Perfect,
            (Some("noisy"), Some(rest)) => {
                let fields: Vec<&str> = rest.split(':').collect();
                let prob = |i: usize| {
                    fields
                        .get(i)
                        .ok_or_else(bad)?
                        .parse::<f64>()
                        .map_err(|_| bad())
                };
                let seed = match fields.get(2) {
                    Some(v) => v.parse().map_err(|_| bad())?,
                    None => 0,
                };
                if fields.len() > 3 {
                    return Err(bad());
                }
                AgentSpec::Noisy {
                    p_factual: prob(0)?,
                    p_counterfactual: prob(1)?,
                    seed,
                }
            }
            (Some("remote"), rest) => {
                let (model, endpoint) = match rest.and_then(|r| r.split_once('@')) {
                    Some((m, e)) => (Some(m.to_string()), Some(e.to_string())),
                    None => (rest.map(str::to_string), None),
                };
                RemoteSpec::from_env(model, endpoint)?.into()
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<RemoteSpec> for AgentSpec {
    fn from(r: RemoteSpec) -> Self {
        AgentSpec::Remote(r)
    }
}

/// An instantiated agent, ready to answer queries.
#[derive(Debug)]
pub enum Agent {
    Perfect,
    Noisy {
        p_factual: f64,
        p_counterfactual: f64,
        seed: u64,
    },
    Remote {
        identity: String,
        client: RemoteClient,
    },
}

const YES: &str = "Yes.";
const NO: &str = "No.";

impl Agent {
    pub fn from_spec(spec: &AgentSpec) -> Result<Self, LlmError> {
        spec.validate()?;
        Ok(match spec {
            AgentSpec::Perfect => Agent::Perfect,
            AgentSpec::Noisy {
                p_factual,
                p_counterfactual,
                seed,
            } => Agent::Noisy {
                p_factual: *p_factual,
                p_counterfactual: *p_counterfactual,
                seed: *seed,
            },
            AgentSpec::Remote(r) => Agent::Remote {
                identity: spec.identity(),
                client: RemoteClient::from_spec(r)?,
            },
        })
    }

    pub fn remote(identity: impl Into<String>, client: RemoteClient) -> Self {
        Agent::Remote {
            identity: identity.into(),
            client,
        }
    }

    pub fn is_remote(&self) -> bool {
        matches!(self, Agent::Remote { .. })
    }

    /// `replicates` raw answers to one query. Remote answers are looked up in
    /// the cache per replicate index before any request is made.
    pub fn ask(
        &self,
        query: &Query,
        replicates: usize,
        cache: &ResponseCache,
    ) -> Result<Vec<String>, LlmError> {
        if replicates == 0 {
            return Err(LlmError::InvalidAgent(
                "replicates must be at least 1".into(),
            ));
        }
        let answer = |v: bool| if v { YES } else { NO }.to_string();
        match self {
            Agent::Perfect => Ok(vec![answer(query.truth); replicates]),
            Agent::Noisy {
                p_factual,
                p_counterfactual,
                seed,
            } => {
                let p = if query.kind.is_counterfactual() {
                    *p_counterfactual
                } else {
                    *p_factual
                };
                Ok((0..replicates)
                    .map(|r| {
                        let mut rng =
                            rng_for(*seed, &[query.instance_id, query.kind.ordinal(), r as u64]);
                        let flip = rng.random::<f64>() < p;
                        answer(query.truth ^ flip)
                    })
                    .collect())
            }
            Agent::Remote { identity, client } => (0..replicates)
                .map(|r| {
                    let key = cache_key(identity, &query.prompt, client.temperature(), r);
                    if let Some(hit) = cache.get(&key) {
                        return Ok(hit);
                    }
                    let text = client.complete(&query.prompt)?;
                    cache.put(CacheEntry::new(
                        key,
                        identity.clone(),
                        query.prompt.clone(),
                        client.temperature(),
                        r,
                        text.clone(),
                    ))?;
                    Ok(text)
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn query(kind: PromptKind, truth: bool) -> Query {
        Query {
            instance_id: 3,
            kind,
            prompt: "Does 6 divide 12?".into(),
            truth,
        }
    }

    #[test]
    fn perfect_agent_echoes_truth() {
        let cache = ResponseCache::in_memory();
        let out = Agent::Perfect
            .ask(&query(PromptKind::Factual, true), 10, &cache)
            .unwrap();
        assert_eq!(out, vec!["Yes.".to_string(); 10]);
        assert!(cache.is_empty());
    }

    #[test]
    fn noisy_flip_rate_concentrates() {
        let agent = Agent::from_spec(&AgentSpec::Noisy {
            p_factual: 0.0,
            p_counterfactual: 0.5,
            seed: 11,
        })
        .unwrap();
        let cache = ResponseCache::in_memory();
        let q = query(PromptKind::CounterfactualTrue, true);
        let out = agent.ask(&q, 1000, &cache).unwrap();
        let flips = out.iter().filter(|a| *a == "No.").count();
        assert!((450..=550).contains(&flips), "{flips}");
        assert_eq!(out, agent.ask(&q, 1000, &cache).unwrap());
        let fact = agent
            .ask(&query(PromptKind::Factual, false), 50, &cache)
            .unwrap();
        assert!(fact.iter().all(|a| a == "No."));
    }

    #[test]
    fn zero_replicates_rejected() {
        assert!(Agent::Perfect
            .ask(
                &query(PromptKind::Factual, true),
                0,
                &ResponseCache::in_memory()
            )
            .is_err());
    }

    #[test]
    fn spec_parsing_and_validation() {
        assert_eq!("perfect".parse::<AgentSpec>().unwrap(), AgentSpec::Perfect);
        assert_eq!(
            "noisy:0.1:0.05:9".parse::<AgentSpec>().unwrap(),
            AgentSpec::Noisy {
                p_factual: 0.1,
                p_counterfactual: 0.05,
                seed: 9
            }
        );
        assert!("noisy:1.5:0".parse::<AgentSpec>().is_err());
        assert!("noisy:0.1".parse::<AgentSpec>().is_err());
        assert!("oracle".parse::<AgentSpec>().is_err());
        assert_eq!(
            "remote:gpt-4@http://localhost:9/v1"
                .parse::<AgentSpec>()
                .unwrap(),
            AgentSpec::Remote(RemoteSpec {
                endpoint: "http://localhost:9/v1".into(),
                model: "gpt-4".into(),
                temperature: None,
                max_tokens: None,
            })
        );
        let neg = AgentSpec::Remote(RemoteSpec {
            endpoint: "http://x".into(),
            model: "m".into(),
            temperature: Some(-1.0),
            max_tokens: None,
        });
        assert!(neg.validate().is_err());
    }

    #[test]
    fn spec_serde_shape() {
        let spec: AgentSpec =
            serde_json::from_str(r#"{"kind":"noisy","p_counterfactual":0.2,"seed":4}"#).unwrap();
        assert_eq!(spec.identity(), "noisy:0:0.2:4");
        assert!(serde_json::from_str::<AgentSpec>(r#"{"kind":"noisy","bogus":1}"#).is_err());
    }
}
