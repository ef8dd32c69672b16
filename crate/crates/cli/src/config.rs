//! Flat `key = value` experiment files.
//!
//! Blank lines and `#` comments are ignored. A key may repeat to form a
//! list; scalar accessors reject repeated keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{bad, CliError, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    base_dir: Option<PathBuf>,
    entries: BTreeMap<String, Vec<String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return bad(format!("line {}: expected `key = value`, got `{line}`", n + 1));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return bad(format!("line {}: empty key", n + 1));
            }
            entries.entry(k.to_string()).or_default().push(v.to_string());
        }
        Ok(Self {
            base_dir: None,
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), vec![value.into()]);
    }

    /// SHA-256 over the sorted effective entries.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, vs) in &self.entries {
            for v in vs {
                h.update(k.as_bytes());
                h.update(b"=");
                h.update(v.as_bytes());
                h.update(b"\n");
            }
        }
        hex(&h.finalize())
    }

    /// Fail on any key outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            if !allowed.contains(&k.as_str()) {
                return bad(format!("unknown key `{k}`; expected one of: {}", allowed.join(", ")));
            }
        }
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&self, key: &str) -> Result<Option<&str>> {
        match self.entries.get(key).map(Vec::as_slice) {
            None => Ok(None),
            Some([v]) => Ok(Some(v.as_str())),
            Some(_) => bad(format!("key `{key}` given more than once")),
        }
    }

    fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| CliError::Config(format!("key `{key}`: cannot parse `{v}`")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)?.map(|v| Self::parse_value(key, v)).transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        match self.get(key)? {
            Some(v) => Ok(v),
            None => bad(format!("missing required key `{key}`")),
        }
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        self.entries
            .get(key)
            .map_or(&[][..], Vec::as_slice)
            .iter()
            .map(|v| Self::parse_value(key, v))
            .collect()
    }

    /// Repeated `a,b` pairs.
    pub fn pairs(&self, key: &str) -> Result<Vec<(f64, f64)>> {
        self.list::<String>(key)?
            .iter()
            .map(|v| {
                let (a, b) = v
                    .split_once(',')
                    .ok_or_else(|| CliError::Config(format!("key `{key}`: expected `a,b`, got `{v}`")))?;
                Ok((Self::parse_value(key, a.trim())?, Self::parse_value(key, b.trim())?))
            })
            .collect()
    }

    /// Path value, resolved against the config file's directory.
    pub fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.raw(key)?.map(|v| {
            let p = PathBuf::from(v);
            match &self.base_dir {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            }
        }))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
