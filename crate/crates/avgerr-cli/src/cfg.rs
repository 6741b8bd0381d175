//! Config files: either plain `key = value` lines or a JSON object.
//!
//! Values end up as strings and are parsed per key by the command that owns
//! them; command-line flags always win over file values.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub struct ConfigMap(BTreeMap<String, String>);

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

pub fn load(path: &Path) -> Result<ConfigMap> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let map = if text.trim_start().starts_with('{') {
        from_json(&text)
    } else {
        from_key_value(&text)
    }
    .with_context(|| format!("parsing config file {}", path.display()))?;
    Ok(ConfigMap(map))
}

fn from_json(text: &str) -> Result<BTreeMap<String, String>> {
    let doc: serde_json::Value = serde_json::from_str(text)?;
    let obj = doc
        .as_object()
        .context("config document must be a JSON object")?;
    let mut map = BTreeMap::new();
    for (key, value) in obj {
        let rendered = match value {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Bool(b) => b.to_string(),
            serde_json::Value::Array(items) => {
                let mut parts = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        serde_json::Value::Number(n) => parts.push(n.to_string()),
                        serde_json::Value::String(s) => parts.push(s.clone()),
                        other => bail!("config key {key:?} has a non-scalar list entry: {other}"),
                    }
                }
                parts.join(",")
            }
            other => bail!("config key {key:?} has unsupported value {other}"),
        };
        map.insert(normalize_key(key), rendered);
    }
    Ok(map)
}

fn from_key_value(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {} is not `key = value`: {line:?}", i + 1);
        };
        map.insert(normalize_key(key), value.trim().to_string());
    }
    Ok(map)
}

impl ConfigMap {
    pub fn get_str(&self, key: &str) -> Option<String> {
        self.0.get(key).cloned()
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key {key} = {raw:?}: {e}"),
            },
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse(key)
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.parse(key)
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse(key)
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(raw) = self.0.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for part in raw.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            out.push(
                part.parse()
                    .with_context(|| format!("config key {key}: bad number {part:?}"))?,
            );
        }
        Ok(Some(out))
    }
}

/// Empty map for commands invoked without --config.
pub fn empty() -> ConfigMap {
    ConfigMap(BTreeMap::new())
}
