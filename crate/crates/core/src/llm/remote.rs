//! Minimal blocking chat-completion client.
//!
//! Wire contract: `POST {endpoint}/chat/completions` with a bearer token and
//! a JSON body `{"model", "messages": [{"role": "user", "content"}],
//! "temperature"?, "max_tokens"?}`; the answer is read from
//! `choices[0].message.content`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::agent::RemoteSpec;
use super::LlmError;

pub const ENV_API_BASE: &str = "CAUSEVAL_API_BASE";
pub const ENV_API_KEY: &str = "CAUSEVAL_API_KEY";
pub const ENV_MODEL: &str = "CAUSEVAL_MODEL";

/// Bounded exponential backoff: attempt `i` (from 0) waits
/// `min(base * 2^i, max)` before the next try.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay
            .saturating_mul(1u32.checked_shl(attempt).unwrap_or(u32::MAX))
            .min(self.max_delay)
    }
}

impl RemoteSpec {
    /// Fills missing fields from `CAUSEVAL_API_BASE` and `CAUSEVAL_MODEL`.
    pub fn from_env(model: Option<String>, endpoint: Option<String>) -> Result<Self, LlmError> {
        let endpoint = match endpoint {
            Some(e) => e,
            None => std::env::var(ENV_API_BASE)
                .map_err(|_| LlmError::MissingCredentials(ENV_API_BASE))?,
        };
        let model = match model.filter(|m| !m.is_empty()) {
            Some(m) => m,
            None => {
                std::env::var(ENV_MODEL).map_err(|_| LlmError::MissingCredentials(ENV_MODEL))?
            }
        };
        Ok(RemoteSpec {
            endpoint,
            model,
            temperature: None,
            max_tokens: None,
        })
    }
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

#[derive(Debug)]
pub struct RemoteClient {
    url: String,
    api_key: String,
    model: String,
    temperature: Option<f64>,
    max_tokens: Option<u32>,
    retry: RetryPolicy,
    http: ureq::Agent,
    requests: AtomicU64,
}

enum Attempt {
    Done(String),
    Retry(LlmError),
    Fail(LlmError),
}

impl RemoteClient {
    /// Reads the API key from `CAUSEVAL_API_KEY`.
    pub fn from_spec(spec: &RemoteSpec) -> Result<Self, LlmError> {
        let key =
            std::env::var(ENV_API_KEY).map_err(|_| LlmError::MissingCredentials(ENV_API_KEY))?;
        Ok(Self::new(spec, key, RetryPolicy::default()))
    }

    pub fn new(spec: &RemoteSpec, api_key: impl Into<String>, retry: RetryPolicy) -> Self {
        let http: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self {
            url: format!("{}/chat/completions", spec.endpoint.trim_end_matches('/')),
            api_key: api_key.into(),
            model: spec.model.clone(),
            temperature: spec.temperature,
            max_tokens: spec.max_tokens,
            retry,
            http,
            requests: AtomicU64::new(0),
        }
    }

    pub fn temperature(&self) -> Option<f64> {
        self.temperature
    }

    /// Number of HTTP requests issued so far, retries included.
    pub fn request_count(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let attempts = self.retry.max_attempts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.retry.delay(attempt - 1));
            }
            match self.attempt(prompt, attempt + 1) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn attempt(&self, prompt: &str, attempts: u32) -> Attempt {
        self.requests.fetch_add(1, Ordering::Relaxed);
        let body = ChatRequest {
            model: &self.model,
            messages: [Message {
                role: "user",
                content: prompt,
            }],
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        };
        let response = self
            .http
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body);
        let mut response = match response {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry(LlmError::Transport {
                    message: e.to_string(),
                    attempts,
                })
            }
        };
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Attempt::Fail(LlmError::Auth(status)),
            408 | 429 | 500..=599 => return Attempt::Retry(LlmError::Http { status, attempts }),
            _ => return Attempt::Fail(LlmError::Http { status, attempts }),
        }
        match response.body_mut().read_json::<ChatResponse>() {
            Ok(parsed) => match parsed
                .choices
                .into_iter()
                .next()
                .and_then(|c| c.message.content)
            {
                Some(text) => Attempt::Done(text),
                None => Attempt::Fail(LlmError::BadResponse("no message content".into())),
            },
            Err(e) => Attempt::Fail(LlmError::BadResponse(e.to_string())),
        }
    }
}
