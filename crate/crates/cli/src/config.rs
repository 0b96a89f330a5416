//! `key = value` config files. Keys are the long flag names; `_` and `-`
//! are interchangeable and `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str, allowed: &[&str]) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("config line {}: expected key = value", n + 1))
            })?;
            let key = k.trim().replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::usage(format!(
                    "config line {}: unknown key {key:?}",
                    n + 1
                )));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::usage(format!(
                    "config line {}: {key:?} set twice",
                    n + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path, allowed: &[&str]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, allowed)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| CliError::usage(format!("config key {key}: {e}")))
            })
            .transpose()
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(Vec::new());
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| CliError::usage(format!("config key {key}: {s:?}: {e}")))
            })
            .collect()
    }
}

/// A flag value, falling back to the config file.
pub fn pick<T: FromStr>(flag: Option<T>, file: &KeyValues, key: &str) -> CliResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

/// Block extents written `BXxBYxBZ`; `BXxBY` means `bz = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSize(pub [usize; 3]);

impl FromStr for BlockSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(['x', 'X']).collect();
        let nums = parts
            .iter()
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("bad block size {s:?}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let b = match nums.as_slice() {
            [x, y] => [*x, *y, 1],
            [x, y, z] => [*x, *y, *z],
            _ => return Err(format!("block size {s:?} needs 2 or 3 extents")),
        };
        if b.contains(&0) {
            return Err(format!("block size {s:?} has a zero extent"));
        }
        Ok(BlockSize(b))
    }
}

impl std::fmt::Display for BlockSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.0[0], self.0[1], self.0[2])
    }
}
