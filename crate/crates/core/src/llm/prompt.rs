//! Prompt templates with named value slots and a boolean branch slot.
//!
//! Syntax: `{name}` is replaced by the slot value called `name`;
//! `{when true|when false}` is replaced by one of its two alternatives
//! according to the forced value passed at render time. Braces do not
//! nest and cannot be escaped; none of the shipped prompts need them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LlmError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
enum Segment {
    Text(String),
    Slot(String),
    Branch {
        when_true: String,
        when_false: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    source: String,
    segments: Vec<Segment>,
}

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self, LlmError> {
        let mut segments = Vec::new();
        let mut rest = source;
        while let Some(open) = rest.find('{') {
            if open > 0 {
                segments.push(Segment::Text(rest[..open].to_string()));
            }
            let after = &rest[open + 1..];
            let close = after
                .find('}')
                .ok_or_else(|| LlmError::Template(format!("unclosed slot in `{source}`")))?;
            let body = &after[..close];
            if body.contains('{') {
                return Err(LlmError::Template(format!("nested brace in `{source}`")));
            }
            segments.push(match body.split_once('|') {
                Some((t, f)) => Segment::Branch {
                    when_true: t.to_string(),
                    when_false: f.to_string(),
                },
                None if body.is_empty() => {
                    return Err(LlmError::Template(format!("empty slot in `{source}`")))
                }
                None => Segment::Slot(body.to_string()),
            });
            rest = &after[close + 1..];
        }
        if rest.contains('}') {
            return Err(LlmError::Template(format!("stray `}}` in `{source}`")));
        }
        if !rest.is_empty() {
            segments.push(Segment::Text(rest.to_string()));
        }
        Ok(Self {
            source: source.to_string(),
            segments,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Names of the value slots, in order of first appearance.
    pub fn slot_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for seg in &self.segments {
            if let Segment::Slot(name) = seg {
                if !names.contains(&name.as_str()) {
                    names.push(name);
                }
            }
        }
        names
    }

    pub fn has_branch(&self) -> bool {
        self.segments
            .iter()
            .any(|s| matches!(s, Segment::Branch { .. }))
    }

    pub fn render(
        &self,
        slots: &BTreeMap<String, String>,
        forced: Option<bool>,
    ) -> Result<String, LlmError> {
        let mut out = String::with_capacity(self.source.len() + 16);
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Slot(name) => out.push_str(
                    slots
                        .get(name)
                        .ok_or_else(|| LlmError::MissingSlot(name.clone()))?,
                ),
                Segment::Branch {
                    when_true,
                    when_false,
                } => match forced {
                    Some(true) => out.push_str(when_true),
                    Some(false) => out.push_str(when_false),
                    None => return Err(LlmError::MissingSlot("branch".into())),
                },
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slots(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn renders_slots_and_branch() {
        let t = PromptTemplate::parse("Imagine {N} {has|has not} 3. Does 6 divide {N}?").unwrap();
        assert_eq!(t.slot_names(), vec!["N"]);
        assert!(t.has_branch());
        assert_eq!(
            t.render(&slots(&[("N", "10")]), Some(false)).unwrap(),
            "Imagine 10 has not 3. Does 6 divide 10?"
        );
    }

    #[test]
    fn missing_slot_and_branch_are_errors() {
        let t = PromptTemplate::parse("{A} and {x|y}").unwrap();
        assert_eq!(
            t.render(&BTreeMap::new(), Some(true)).unwrap_err(),
            LlmError::MissingSlot("A".into())
        );
        assert!(t.render(&slots(&[("A", "1")]), None).is_err());
    }

    #[test]
    fn malformed_templates_are_rejected() {
        assert!(PromptTemplate::parse("oops {N").is_err());
        assert!(PromptTemplate::parse("oops N}").is_err());
        assert!(PromptTemplate::parse("oops {}").is_err());
        assert!(PromptTemplate::parse("{a{b}}").is_err());
    }
}
