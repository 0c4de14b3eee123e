//! Plain-text experiment configuration: `key = value` lines with optional
//! `[section]` headers (flattened to `section.key`), `#` comments, and no
//! includes — a manifest should be auditable by eye.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CfgError {
    Io(std::io::Error),
    Parse { line: usize, text: String },
    Missing(String),
    Invalid { key: String, value: String, expected: &'static str },
}

impl fmt::Display for CfgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfgError::Io(e) => write!(f, "config io: {e}"),
            CfgError::Parse { line, text } => write!(f, "config line {line}: cannot parse `{text}`"),
            CfgError::Missing(k) => write!(f, "config key `{k}` is required"),
            CfgError::Invalid { key, value, expected } => {
                write!(f, "config key `{key}` = `{value}`: expected {expected}")
            }
        }
    }
}

impl std::error::Error for CfgError {}

impl From<std::io::Error> for CfgError {
    fn from(e: std::io::Error) -> Self {
        CfgError::Io(e)
    }
}

/// Flat key-value configuration.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CfgError> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CfgError::Parse {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            values.insert(key, v.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self, CfgError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CfgError> {
        self.parse_with(key, "a real number", default, str::parse::<f64>)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CfgError> {
        self.parse_with(key, "an unsigned integer", default, str::parse::<u64>)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CfgError> {
        self.parse_with(key, "an unsigned integer", default, str::parse::<usize>)
    }

    /// Comma-separated list of reals.
    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CfgError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| CfgError::Invalid {
                        key: key.to_string(),
                        value: v.to_string(),
                        expected: "a comma-separated list of reals",
                    })
                })
                .collect(),
        }
    }

    fn parse_with<T, E>(
        &self,
        key: &str,
        expected: &'static str,
        default: T,
        parse: impl Fn(&str) -> Result<T, E>,
    ) -> Result<T, CfgError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse(v).map_err(|_| CfgError::Invalid {
                key: key.to_string(),
                value: v.to_string(),
                expected,
            }),
        }
    }

    /// All key-value pairs, for manifest echoing.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}
