//! Experiment configs: flat `key = value` lines, `#` comments, and
//! `include = <path>` lines that splice another file in place. Later keys
//! override earlier ones.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use braidflow::flow::catalog::named_system;
use braidflow::flow::spec::parse_key_values;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("include cycle through {0}")]
    IncludeCycle(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

/// Keys accepted in experiment configs besides `tol.<name>`.
pub const KEYS: &[&str] = &[
    "experiment",
    "hamiltonian",
    "duration",
    "perturbation",
    "n",
    "p",
    "samples",
    "k",
    "m",
    "seed",
    "quasimorphism",
    "domain",
    "deltas",
    "point",
    "points",
    "defect",
    "lipschitz",
    "factors",
    "output",
];

/// Keys whose values name files, resolved against the declaring file.
const PATH_KEYS: &[&str] = &["hamiltonian", "perturbation"];

#[derive(Clone, Debug, Default)]
pub struct Config {
    pub values: BTreeMap<String, String>,
    /// Contents of every file the config references, keyed by path.
    pub files: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut config = Config::default();
        let mut stack = BTreeSet::new();
        config.read_file(path, &mut stack)?;
        config.validate_keys()?;
        Ok(config)
    }

    #[cfg(test)]
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut config = Config::default();
        config.read_text(text, "<config>", base, &mut BTreeSet::new())?;
        config.validate_keys()?;
        Ok(config)
    }

    fn read_file(&mut self, path: &Path, stack: &mut BTreeSet<PathBuf>) -> Result<(), ConfigError> {
        let shown = path.display().to_string();
        let canonical = path.canonicalize().map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        if !stack.insert(canonical.clone()) {
            return Err(ConfigError::IncludeCycle(shown));
        }
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        self.read_text(&text, &shown, &base, stack)?;
        stack.remove(&canonical);
        Ok(())
    }

    fn read_text(&mut self, text: &str, shown: &str, base: &Path, stack: &mut BTreeSet<PathBuf>) -> Result<(), ConfigError> {
        let pairs = parse_key_values(text).map_err(|message| ConfigError::Syntax { path: shown.into(), message })?;
        for (key, value) in pairs {
            if key == "include" {
                self.read_file(&base.join(&value), stack)?;
                continue;
            }
            let value = self.resolve_value(&key, value, base)?;
            self.values.insert(key, value);
        }
        Ok(())
    }

    fn resolve_value(&mut self, key: &str, value: String, base: &Path) -> Result<String, ConfigError> {
        if PATH_KEYS.contains(&key) {
            return self.resolve_refs(&value, base);
        }
        match value.strip_prefix("combo:") {
            Some(file) if key == "quasimorphism" => {
                let path = base.join(file.trim());
                let shown = path.display().to_string();
                let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
                self.files.insert(shown.clone(), text);
                Ok(format!("combo:{shown}"))
            }
            _ => Ok(value),
        }
    }

    /// Catalog names stay as they are; anything else is a spec file path
    /// made relative to the current directory and read into `files`.
    fn resolve_refs(&mut self, value: &str, base: &Path) -> Result<String, ConfigError> {
        let mut out = Vec::new();
        for item in split_list(value) {
            if named_system(item).is_some() {
                out.push(item.to_string());
                continue;
            }
            let path = base.join(item);
            let shown = path.display().to_string();
            let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
            self.files.insert(shown.clone(), text);
            out.push(shown);
        }
        Ok(out.join(", "))
    }

    fn validate_keys(&self) -> Result<(), ConfigError> {
        for key in self.values.keys() {
            if !KEYS.contains(&key.as_str()) && !key.starts_with("tol.") {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = self.resolve_value(key, value.to_string(), Path::new("."))?;
        self.values.insert(key.to_string(), value);
        self.validate_keys()
    }

    /// SHA-256 over the resolved keys (except `output`) and the contents of
    /// referenced files.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.values.iter().filter(|(k, _)| k.as_str() != "output") {
            h.update(format!("{k}={v}\n"));
        }
        for (path, text) in &self.files {
            h.update(format!("file {path} {}\n", text.len()));
            h.update(text);
        }
        format!("{:x}", h.finalize())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &'static str) -> Result<&str, ConfigError> {
        self.get(key).ok_or(ConfigError::Missing(key))
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| ConfigError::Invalid { key: key.into(), message: format!("{v:?}: {e}") }))
            .transpose()
    }

    pub fn required<T: std::str::FromStr>(&self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?.ok_or(ConfigError::Missing(key))
    }

    pub fn list<T: std::str::FromStr>(&self, key: &'static str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                split_list(v)
                    .map(|item| item.parse::<T>().map_err(|e| ConfigError::Invalid { key: key.into(), message: format!("{item:?}: {e}") }))
                    .collect()
            })
            .transpose()
    }

    pub fn tolerance_overrides(&self) -> Result<Vec<(String, f64)>, ConfigError> {
        self.values
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("tol.").map(|name| (k, name, v)))
            .map(|(key, name, v)| {
                let value = v.parse::<f64>().map_err(|e| ConfigError::Invalid { key: key.clone(), message: format!("{v:?}: {e}") })?;
                Ok((name.to_string(), value))
            })
            .collect()
    }
}

pub fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn later_keys_override_and_lists_split() {
        let c = Config::parse("seed = 1\nk = 4  # comment\nseed = 2\ndeltas = 0.2, 0.1\n", Path::new(".")).unwrap();
        assert_eq!(c.required::<u64>("seed").unwrap(), 2);
        assert_eq!(c.list::<f64>("deltas").unwrap(), Some(vec![0.2, 0.1]));
        assert!(matches!(c.required::<u64>("samples"), Err(ConfigError::Missing("samples"))));
        assert!(matches!(c.required::<usize>("seed").map(|_| ()), Ok(())));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_errors() {
        assert!(matches!(Config::parse("sede = 1\n", Path::new(".")), Err(ConfigError::UnknownKey(_))));
        let c = Config::parse("samples = many\n", Path::new(".")).unwrap();
        assert!(matches!(c.required::<usize>("samples"), Err(ConfigError::Invalid { .. })));
        assert!(Config::parse("no equals sign\n", Path::new(".")).is_err());
    }

    #[test]
    fn hash_tracks_values() {
        let a = Config::parse("seed = 1\nhamiltonian = disc-bump\n", Path::new(".")).unwrap();
        let b = Config::parse("hamiltonian = disc-bump\nseed = 1\n", Path::new(".")).unwrap();
        let c = Config::parse("seed = 2\nhamiltonian = disc-bump\n", Path::new(".")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        let d = Config::parse("seed = 1\nhamiltonian = disc-bump\noutput = elsewhere\n", Path::new(".")).unwrap();
        assert_eq!(a.hash(), d.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
