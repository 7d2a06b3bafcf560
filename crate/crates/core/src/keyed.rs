//! `KEY=value` text files: one pair per line, `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KeyedError {
    #[error("line {line}: expected KEY=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key {key}")]
    Duplicate { line: usize, key: String },
    #[error("key {key}: cannot parse {value:?} ({reason})")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing required key {0}")]
    Missing(String),
    #[error("unknown key {key} on line {line}")]
    Unknown { line: usize, key: String },
}

/// Parsed key/value pairs, remembering the line each key came from.
#[derive(Debug, Clone, Default)]
pub struct Keyed {
    entries: BTreeMap<String, (usize, String)>,
}

impl Keyed {
    pub fn parse(text: &str) -> Result<Self, KeyedError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| KeyedError::Syntax {
                line,
                text: raw.to_string(),
            })?;
            let key = key.trim().to_ascii_uppercase();
            if key.is_empty() {
                return Err(KeyedError::Syntax {
                    line,
                    text: raw.to_string(),
                });
            }
            if entries
                .insert(key.clone(), (line, value.trim().to_string()))
                .is_some()
            {
                return Err(KeyedError::Duplicate { line, key });
            }
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, KeyedError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e: T::Err| KeyedError::Value {
                key: key.to_string(),
                value: v.to_string(),
                reason: e.to_string(),
            }),
        }
    }

    pub fn require<T>(&self, key: &str) -> Result<T, KeyedError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| KeyedError::Missing(key.to_string()))
    }

    /// Rejects keys outside `allowed`, catching typos in hand-edited files.
    pub fn deny_unknown(&self, allowed: &[&str]) -> Result<(), KeyedError> {
        for (key, (line, _)) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(KeyedError::Unknown {
                    line: *line,
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn value_error(key: &str, value: &str, reason: impl Into<String>) -> KeyedError {
        KeyedError::Value {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.into(),
        }
    }
}
