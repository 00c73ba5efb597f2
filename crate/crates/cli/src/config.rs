//! Flat key-value config file support. Precedence everywhere is
//! flag > config file > built-in default; keys may be namespaced per
//! subcommand ("gaps.bins") or global ("bins"), with the namespaced key
//! winning.

use anyhow::{bail, Context, Result};
use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Default, Clone)]
pub struct Config {
    entries: HashMap<String, String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let mut entries = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    bail!(
                        "{}:{}: expected `key = value`, got `{line}`",
                        path.display(),
                        lineno + 1
                    );
                };
                entries.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Config { entries })
    }

    pub fn get<T: FromStr>(&self, scope: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self
            .entries
            .get(&format!("{scope}.{key}"))
            .or_else(|| self.entries.get(key));
        match raw {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key {key}: cannot parse `{raw}`: {e}"),
            },
        }
    }

    /// flag > config > default
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, scope: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        Ok(self.get(scope, key)?.unwrap_or(default))
    }
}
