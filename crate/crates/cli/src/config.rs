// SPDX-License-Identifier: Apache-2.0

//! `key = value` settings files. Top-level keys apply to every command; a
//! `[command]` table overrides them for that command. Flags given on the
//! command line win over both.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Bad invocation: exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Default)]
pub struct Settings {
    table: toml::Table,
    section: String,
}

impl Settings {
    pub fn load(path: Option<&Path>, section: &str) -> anyhow::Result<Settings> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| usage(format!("config {}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| usage(format!("config {}: {e}", p.display())))?
            }
        };
        Ok(Settings { table, section: section.to_string() })
    }

    fn raw(&self, key: &str) -> Option<String> {
        let scoped = self.table.get(&self.section).and_then(|s| s.as_table()).and_then(|t| t.get(key));
        let v = scoped.or_else(|| self.table.get(key).filter(|v| !v.is_table()))?;
        Some(match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Array(items) => items
                .iter()
                .map(|i| i.as_str().map(str::to_string).unwrap_or_else(|| i.to_string()))
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        })
    }

    /// The flag if given, else the file value, else `None`.
    pub fn get<T>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|e| usage(format!("config key `{key}`: {e}"))),
        }
    }

    pub fn or<T>(&self, flag: Option<T>, key: &str, default: T) -> anyhow::Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    pub fn need<T>(&self, flag: Option<T>, key: &str) -> anyhow::Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.get(flag, key)?.ok_or_else(|| usage(format!("missing `--{key}` (flag or config)")))
    }

    pub fn flag(&self, flag: bool, key: &str) -> anyhow::Result<bool> {
        Ok(flag || self.get(None, key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(text: &str, section: &str) -> Settings {
        Settings { table: text.parse().unwrap(), section: section.into() }
    }

    #[test]
    fn flags_beat_sections_beat_top_level() {
        let s = settings("seed = 3\nscheme = \"xor\"\n[lock]\nscheme = \"mux\"\n", "lock");
        assert_eq!(s.get::<String>(None, "scheme").unwrap().as_deref(), Some("mux"));
        assert_eq!(s.get(Some("lut".to_string()), "scheme").unwrap().as_deref(), Some("lut"));
        assert_eq!(s.get::<u64>(None, "seed").unwrap(), Some(3));
        let other = settings("seed = 3\n[lock]\nseed = 9\n", "train");
        assert_eq!(other.get::<u64>(None, "seed").unwrap(), Some(3));
    }

    #[test]
    fn arrays_become_comma_lists() {
        let s = settings("schemes = [\"xor\", \"mux\"]\n", "dataset");
        assert_eq!(s.get::<String>(None, "schemes").unwrap().as_deref(), Some("xor,mux"));
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let s = settings("epochs = \"many\"\n", "train");
        let err = s.get::<usize>(None, "epochs").unwrap_err();
        assert!(err.downcast_ref::<Usage>().is_some());
    }
}
