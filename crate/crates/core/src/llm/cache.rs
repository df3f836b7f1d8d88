use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

/// One cached response, stored as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub agent: String,
    pub prompt: String,
    pub temperature: Option<f64>,
    pub replicate: usize,
    /// Seconds since the Unix epoch when the response was received.
    pub timestamp: u64,
    pub raw_text: String,
}

impl CacheEntry {
    pub fn new(
        key: String,
        agent: String,
        prompt: String,
        temperature: Option<f64>,
        replicate: usize,
        raw_text: String,
    ) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            key,
            agent,
            prompt,
            temperature,
            replicate,
            timestamp,
            raw_text,
        }
    }
}

/// SHA-256 over an unambiguous encoding of the request identity.
pub fn cache_key(agent: &str, prompt: &str, temperature: Option<f64>, replicate: usize) -> String {
    let encoded = serde_json::to_vec(&(agent, prompt, temperature, replicate))
        .expect("tuple of plain values serializes");
    hex::encode(Sha256::digest(&encoded))
}

#[derive(Debug)]
struct Inner {
    entries: HashMap<String, String>,
    file: Option<File>,
}

/// Append-only response store. Lookups and appends are serialized through
/// one lock; each append is flushed before returning so an interrupted run
/// keeps everything it received.
#[derive(Debug)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    skipped_lines: usize,
    inner: Mutex<Inner>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            skipped_lines: 0,
            inner: Mutex::new(Inner {
                entries: HashMap::new(),
                file: None,
            }),
        }
    }

    /// Loads `path` if it exists and appends new entries to it. Lines that
    /// fail to parse (such as a write cut short by an interruption) are
    /// skipped and counted.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let io = |e: std::io::Error| LlmError::Cache(format!("{}: {e}", path.display()));
        let mut entries = HashMap::new();
        let mut skipped_lines = 0;
        let mut torn_tail = false;
        if path.exists() {
            let contents = std::fs::read_to_string(&path).map_err(io)?;
            torn_tail = !contents.is_empty() && !contents.ends_with('\n');
            for line in contents.lines().filter(|l| !l.trim().is_empty()) {
                match serde_json::from_str::<CacheEntry>(line) {
                    Ok(e) => {
                        entries.insert(e.key, e.raw_text);
                    }
                    Err(_) => skipped_lines += 1,
                }
            }
        } else if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io)?;
        if torn_tail {
            file.write_all(b"\n").map_err(io)?;
        }
        Ok(Self {
            path: Some(path),
            skipped_lines,
            inner: Mutex::new(Inner {
                entries,
                file: Some(file),
            }),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.inner
            .lock()
            .expect("cache lock")
            .entries
            .get(key)
            .cloned()
    }

    /// Records a response. An existing key keeps its first value.
    pub fn put(&self, entry: CacheEntry) -> Result<(), LlmError> {
        let mut inner = self.inner.lock().expect("cache lock");
        if inner.entries.contains_key(&entry.key) {
            return Ok(());
        }
        if let Some(file) = inner.file.as_mut() {
            let mut line =
                serde_json::to_string(&entry).map_err(|e| LlmError::Cache(e.to_string()))?;
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| LlmError::Cache(e.to_string()))?;
        }
        inner.entries.insert(entry.key, entry.raw_text);
        Ok(())
    }
}
