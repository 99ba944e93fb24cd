//! Flat key=value configuration with command-line overrides.
//!
//! A config file holds one `key = value` pair per line (`#` starts a
//! comment). Method parameters can be scoped with the lowercased method name
//! (`sir-nnr.alpha = 5`) so one file can configure several methods at once.
//! Command-line flags always win over file values.

use fsir::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

/// Keys that may appear unscoped in a config file.
const GLOBAL_KEYS: &[&str] = &[
    "data",
    "model",
    "method",
    "task",
    "alpha",
    "q",
    "q2",
    "kn",
    "bandwidth",
    "slices",
    "splits",
    "learn-size",
    "test-size",
    "seed",
    "out",
    "knots",
    "order",
    "split-fraction",
    "n-list",
    "replicates",
    "noise-sd",
    "grid-size",
    "q-star",
    "direction-eps",
    "direction-seed",
    "link",
    "n-classes",
    "spectrum",
    "domain-lo",
    "domain-hi",
];

/// Method name prefixes allowed on scoped keys, with the parameters each
/// method understands.
const METHOD_KEYS: &[(&str, &[&str])] = &[
    ("sir-nnr", &["alpha", "q", "q2"]),
    ("sir-nnp", &["kn", "q", "q2"]),
    ("pca-nn", &["kn", "q2"]),
    ("sir-l", &["alpha", "q"]),
    ("sir-k", &["alpha", "q", "bandwidth"]),
];

/// Merged view of a config file and the flags that override it.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    flags: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(config_path: Option<&Path>) -> Result<Settings> {
        let mut file = BTreeMap::new();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::InvalidArgument(format!("cannot read config file {}: {e}", path.display()))
            })?;
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "config line {}: expected `key = value`, got `{raw}`",
                        idx + 1
                    ))
                })?;
                let key = key.trim().to_string();
                validate_key(&key)?;
                file.insert(key, value.trim().to_string());
            }
        }
        Ok(Settings { file, flags: BTreeMap::new() })
    }

    /// Record a command-line override; `None` flags are ignored.
    pub fn set_flag(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.flags.insert(key.to_string(), v);
        }
    }

    /// Raw lookup: flags beat file values.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.flags.get(key).or_else(|| self.file.get(key)).map(|s| s.as_str())
    }

    /// Lookup for a parameter of a specific method: a flag wins, then the
    /// method-scoped file key, then the unscoped file key.
    pub fn get_scoped(&self, method: &str, key: &str) -> Option<&str> {
        if let Some(v) = self.flags.get(key) {
            return Some(v);
        }
        let scoped = format!("{}.{key}", method.to_lowercase());
        self.file.get(&scoped).or_else(|| self.file.get(key)).map(|s| s.as_str())
    }

    pub fn parsed<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key).map(|raw| parse_value(key, raw)).transpose()
    }

    pub fn parsed_or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn require<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            Some(raw) => parse_value(key, raw),
            None => Err(Error::InvalidArgument(format!(
                "missing required field `{key}` (pass --{key} or set it in the config file)"
            ))),
        }
    }

    pub fn require_scoped<T>(&self, method: &str, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.get_scoped(method, key) {
            Some(raw) => parse_value(key, raw),
            None => Err(Error::InvalidArgument(format!(
                "method {method} needs parameter `{key}` (pass --{key} or set {}.{key} in the \
                 config file)",
                method.to_lowercase()
            ))),
        }
    }

}

fn parse_value<T>(key: &str, raw: &str) -> Result<T>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| {
        Error::InvalidArgument(format!("field `{key}`: cannot parse `{raw}`: {e}"))
    })
}

fn validate_key(key: &str) -> Result<()> {
    if let Some((prefix, param)) = key.split_once('.') {
        for (method, params) in METHOD_KEYS {
            if *method == prefix {
                if params.contains(&param) {
                    return Ok(());
                }
                return Err(Error::InvalidArgument(format!(
                    "method {prefix} does not take parameter `{param}` (valid: {})",
                    params.join(", ")
                )));
            }
        }
        return Err(Error::InvalidArgument(format!(
            "unknown method prefix `{prefix}` in config key `{key}`"
        )));
    }
    if GLOBAL_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("unknown config key `{key}`")))
    }
}

/// Parse a comma-separated list of values.
pub fn parse_list<T>(key: &str, raw: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(|piece| parse_value(key, piece.trim()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn flags_override_file_values_and_scoped_keys_resolve() {
        let f = write_config("alpha = 1\nsir-nnr.alpha = 5\nseed = 9 # comment\n");
        let mut s = Settings::load(Some(f.path())).unwrap();
        assert_eq!(s.get_scoped("SIR-NNr", "alpha"), Some("5"));
        assert_eq!(s.get_scoped("SIR-L", "alpha"), Some("1"));
        s.set_flag("alpha", Some("2".to_string()));
        assert_eq!(s.get_scoped("SIR-NNr", "alpha"), Some("2"));
        assert_eq!(s.require::<u64>("seed").unwrap(), 9);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let f = write_config("alfa = 1\n");
        let err = Settings::load(Some(f.path())).unwrap_err();
        assert!(err.to_string().contains("alfa"), "{err}");
        let f2 = write_config("sir-nnr.bandwidth = 1\n");
        let err2 = Settings::load(Some(f2.path())).unwrap_err();
        assert!(err2.to_string().contains("bandwidth"), "{err2}");
    }

    #[test]
    fn missing_required_field_is_named() {
        let s = Settings::load(None).unwrap();
        let err = s.require::<String>("data").unwrap_err();
        assert!(err.to_string().contains("`data`"), "{err}");
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn lists_parse_with_trimming() {
        let v: Vec<f64> = parse_list("alpha", "0.1, 1,10").unwrap();
        assert_eq!(v, vec![0.1, 1.0, 10.0]);
        assert!(parse_list::<f64>("alpha", "0.1,x").is_err());
    }
}
