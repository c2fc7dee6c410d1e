//! Plain-text defaults for the subcommands.
//!
//! A config file holds `key = value` lines; `#` starts a comment and blank
//! lines are skipped. Keys are the long flag names of the subcommand the
//! file is used with, and a flag given on the command line always wins over
//! the file. Unknown keys are rejected so typos surface instead of being
//! silently ignored.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use oplab::error::{Error, Result};

#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    /// Loads `path`, or returns an empty config when no file was given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| {
            Error::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::validation(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    idx + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::validation(format!(
                    "{}:{}: empty key or value in `{raw}`",
                    path.display(),
                    idx + 1
                )));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(Error::validation(format!(
                    "{}:{}: duplicate key `{key}`",
                    path.display(),
                    idx + 1
                )));
            }
        }
        Ok(FileConfig { values })
    }

    /// Rejects keys that the current subcommand does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.values.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::validation(format!(
                    "unknown config key `{key}`; valid keys: {}",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    /// Flag value if present, else the parsed config value, else None.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                Error::validation(format!("config key `{key}`: cannot parse `{raw}`: {e}"))
            }),
        }
    }

    /// Like [`Self::resolve`], then falls back to `default`.
    pub fn resolve_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.resolve(flag, key)?.unwrap_or(default))
    }

    /// Like [`Self::resolve`], but the parameter must end up set.
    pub fn require<T>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.resolve(flag, key)?.ok_or_else(|| {
            Error::validation(format!("missing required parameter `{key}` (flag or config)"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_comments_blanks_and_values() {
        let f = write_config("# settings\n\nmodel = mixture\ntrials = 7  # per cell\n");
        let cfg = FileConfig::load(Some(f.path())).unwrap();
        cfg.check_keys(&["model", "trials"]).unwrap();
        assert_eq!(cfg.require::<String>(None, "model").unwrap(), "mixture");
        assert_eq!(cfg.resolve_or::<usize>(None, "trials", 1).unwrap(), 7);
    }

    #[test]
    fn flags_override_file_values() {
        let f = write_config("trials = 7\n");
        let cfg = FileConfig::load(Some(f.path())).unwrap();
        assert_eq!(cfg.resolve_or::<usize>(Some(3), "trials", 1).unwrap(), 3);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed_keys() {
        let f = write_config("model = mixture\n");
        let cfg = FileConfig::load(Some(f.path())).unwrap();
        assert!(cfg.check_keys(&["trials"]).unwrap_err().is_validation());

        let dup = write_config("a = 1\na = 2\n");
        assert!(FileConfig::load(Some(dup.path())).unwrap_err().is_validation());

        let bad = write_config("just words\n");
        assert!(FileConfig::load(Some(bad.path())).unwrap_err().is_validation());

        let missing = FileConfig::load(Some(Path::new("/nonexistent/conf"))).unwrap_err();
        assert!(missing.is_validation());
    }

    #[test]
    fn missing_required_parameter_is_a_validation_error() {
        let cfg = FileConfig::default();
        let err = cfg.require::<usize>(None, "n").unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("`n`"));
    }
}
