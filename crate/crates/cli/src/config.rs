//! Flat `key=value` config files.
//!
//! Lines are `key = value`; `#` starts a comment. Values read on demand with
//! typed getters; command-line flags take precedence over file entries.

use infogame_core::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse(format!(
                    "{}:{}: expected key=value, got `{line}`",
                    path.as_ref().display(),
                    lineno + 1
                )));
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    /// CLI flag > config entry > default.
    pub fn get<T: FromStr + Clone>(&self, key: &str, cli: Option<T>, default: T) -> Result<T> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.entries.get(key) {
            Some(raw) => raw.parse::<T>().map_err(|_| {
                Error::Parse(format!("config field `{key}`: cannot parse `{raw}`"))
            }),
            None => Ok(default),
        }
    }

    /// Comma-separated list variant of [`FileConfig::get`].
    pub fn get_list<T: FromStr>(
        &self,
        key: &str,
        cli: Option<Vec<T>>,
        default: Vec<T>,
    ) -> Result<Vec<T>> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.entries.get(key) {
            Some(raw) => parse_list(raw).ok_or_else(|| {
                Error::Parse(format!("config field `{key}`: cannot parse `{raw}`"))
            }),
            None => Ok(default),
        }
    }
}

/// Parse a comma-separated list; `None` when any element fails.
pub fn parse_list<T: FromStr>(raw: &str) -> Option<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let dir = std::env::temp_dir().join("infogame_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "seed = 7\nalpha = 1.0, 0.8 # sweep\n\n# comment\ntol=1e-5\n")
            .unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!(cfg.get::<u64>("seed", None, 0).unwrap(), 7);
        assert_eq!(cfg.get::<u64>("seed", Some(9), 0).unwrap(), 9);
        assert_eq!(cfg.get::<f64>("tol", None, 1e-6).unwrap(), 1e-5);
        assert_eq!(cfg.get::<usize>("missing", None, 3).unwrap(), 3);
        assert_eq!(
            cfg.get_list::<f64>("alpha", None, vec![]).unwrap(),
            vec![1.0, 0.8]
        );
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn reports_bad_lines_and_fields() {
        let dir = std::env::temp_dir().join("infogame_cfg_test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.cfg");
        std::fs::write(&path, "just a line\n").unwrap();
        let err = FileConfig::load(&path).unwrap_err().to_string();
        assert!(err.contains(":1:"), "{err}");

        std::fs::write(&path, "seed = notanumber\n").unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        let err = cfg.get::<u64>("seed", None, 0).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
        std::fs::remove_dir_all(&dir).ok();
    }
}
