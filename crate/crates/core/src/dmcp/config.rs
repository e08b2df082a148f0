use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`")]
    Syntax { line: usize },
    #[error("line {line}: invalid key `{key}`")]
    InvalidKey { key: String, line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { key: String, line: usize },
    #[error("key `{key}`: cannot parse `{value}`")]
    InvalidValue { key: String, value: String },
    #[error("missing key `{0}`")]
    Missing(String),
}

/// Dotted lowercase keys mapped to text values.
///
/// File form: one `key=value` per line, `#` starts a comment line, blank
/// lines are ignored. Keys are `segment(.segment)*` with segments of
/// `[a-z0-9_]`; the first segment may carry an instance suffix `name:N`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigurationSet {
    entries: BTreeMap<String, String>,
}

pub fn is_valid_key(key: &str) -> bool {
    let mut segments = key.split('.');
    let Some(first) = segments.next() else {
        return false;
    };
    let seg_ok = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_');
    let first_ok = match first.split_once(':') {
        Some((name, inst)) => seg_ok(name) && !inst.is_empty() && inst.bytes().all(|b| b.is_ascii_digit()),
        None => seg_ok(first),
    };
    first_ok && segments.all(seg_ok)
}

impl ConfigurationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut set = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let key = key.trim();
            if !is_valid_key(key) {
                return Err(ConfigError::InvalidKey {
                    key: key.to_string(),
                    line,
                });
            }
            if set.entries.contains_key(key) {
                return Err(ConfigError::DuplicateKey {
                    key: key.to_string(),
                    line,
                });
            }
            set.entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(set)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) -> Result<Option<String>, ConfigError> {
        let key = key.into();
        if !is_valid_key(&key) {
            return Err(ConfigError::InvalidKey { key, line: 0 });
        }
        Ok(self.entries.insert(key, value.into()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::InvalidValue {
                key: key.to_string(),
                value: v.to_string(),
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get_parsed(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get_parsed(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Entries under `prefix.`, keyed by the remaining tail.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.iter().filter_map(move |(k, v)| {
            k.strip_prefix(prefix)
                .and_then(|rest| rest.strip_prefix('.'))
                .map(|tail| (tail, v))
        })
    }

    /// The subset delivered to module instance `name:instance`: every
    /// `global.*` key, every `name.*` key, and `name:instance.*` keys
    /// rewritten to `name.*`, overriding plain `name.*` entries.
    pub fn filter_for(&self, name: &str, instance: u32) -> ConfigurationSet {
        let mut out = ConfigurationSet::new();
        for (k, v) in self.with_prefix("global") {
            out.entries.insert(format!("global.{k}"), v.to_string());
        }
        for (k, v) in self.with_prefix(name) {
            out.entries.insert(format!("{name}.{k}"), v.to_string());
        }
        let scoped = format!("{name}:{instance}");
        for (k, v) in self.with_prefix(&scoped) {
            out.entries.insert(format!("{name}.{k}"), v.to_string());
        }
        out
    }

    pub fn extend(&mut self, other: &ConfigurationSet) {
        for (k, v) in other.iter() {
            self.entries.insert(k.to_string(), v.to_string());
        }
    }
}

impl fmt::Display for ConfigurationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for ConfigurationSet {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}
