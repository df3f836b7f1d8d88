//! Mapping free-text answers to booleans.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::cache::{cache_key, CacheEntry, ResponseCache};
use super::remote::RemoteClient;
use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concretization {
    #[default]
    Lexical,
    Extractor,
}

/// How a stored boolean was obtained. `Manual` marks values entered by hand
/// in a dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConcretizationMethod {
    Lexical,
    Extractor,
    Manual,
}

impl ConcretizationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ConcretizationMethod::Lexical => "lexical",
            ConcretizationMethod::Extractor => "extractor",
            ConcretizationMethod::Manual => "manual",
        }
    }
}

impl From<Concretization> for ConcretizationMethod {
    fn from(c: Concretization) -> Self {
        match c {
            Concretization::Lexical => ConcretizationMethod::Lexical,
            Concretization::Extractor => ConcretizationMethod::Extractor,
        }
    }
}

fn affirmative() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(yes|true|is\s+divisible|is\s+even|will\s+be\s+happy|can\s+know)\b")
            .expect("static regex")
    })
}

fn negative() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(no|not|false|cannot)\b").expect("static regex"))
}

/// Whichever of an affirmative or a negative token appears first decides;
/// `None` when the answer has neither.
pub fn concretize_lexical(answer: &str) -> Option<bool> {
    let yes = affirmative().find(answer).map(|m| m.start());
    let no = negative().find(answer).map(|m| m.start());
    match (yes, no) {
        (Some(y), Some(n)) => Some(y < n),
        (Some(_), None) => Some(true),
        (None, Some(_)) => Some(false),
        (None, None) => None,
    }
}

pub fn extractor_prompt(question: &str, answer: &str) -> String {
    format!(
        "You are an entity extractor expert. I am going to give you a question-answer pair. \
         I want you to say if the meaning of answer is positive or negative. If the answer \
         has words like 'Yes' this will make it positive. If the answer contains words like \
         'No' this will make it negative. Always answer with only one word (Positive or \
         Negative). For the question '{question}' and the answer '{answer}' the meaning is"
    )
}

fn read_verdict(text: &str) -> Option<bool> {
    let word = text
        .split_whitespace()
        .next()?
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_ascii_lowercase();
    match word.as_str() {
        "positive" => Some(true),
        "negative" => Some(false),
        _ => None,
    }
}

/// Concretizes one answer. `Ok(None)` means unparseable; errors are reserved
/// for failures talking to the extractor.
pub fn concretize(
    question: &str,
    answer: &str,
    mode: Concretization,
    extractor: Option<(&str, &RemoteClient)>,
    cache: &ResponseCache,
) -> Result<Option<bool>, LlmError> {
    if answer.trim().is_empty() {
        return Ok(None);
    }
    match mode {
        Concretization::Lexical => Ok(concretize_lexical(answer)),
        Concretization::Extractor => {
            let (identity, client) = extractor.ok_or(LlmError::NoExtractor)?;
            let prompt = extractor_prompt(question, answer);
            let key = cache_key(identity, &prompt, client.temperature(), 0);
            let text = match cache.get(&key) {
                Some(hit) => hit,
                None => {
                    let text = client.complete(&prompt)?;
                    cache.put(CacheEntry::new(
                        key,
                        identity.to_string(),
                        prompt,
                        client.temperature(),
                        0,
                        text.clone(),
                    ))?;
                    text
                }
            };
            Ok(read_verdict(&text))
        }
    }
}
