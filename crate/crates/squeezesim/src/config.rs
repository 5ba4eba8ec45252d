//! Flat `key = value` configuration files with bracketed section headers.
//!
//! The format is hand-editable and diff-friendly: blank lines and `#`
//! comments are skipped, a `[section]` line prefixes the keys that follow
//! (`[system]` + `kappa = 0.1` yields the key `system.kappa`), and values
//! are parsed on access. Every successful read is recorded with the value
//! actually used, defaults included, so output files can embed the full
//! resolved configuration; keys that were never read are reported as
//! errors to catch typos.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::{Error, Result};

/// A parsed configuration file plus the record of resolved values.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    read: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Config {
    /// Parse configuration text. Errors carry 1-based line numbers.
    pub fn from_str(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let n = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {n}: unterminated section header")))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::Config(format!("line {n}: empty section name")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {n}: expected key = value")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {n}: empty key")));
            }
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            // strip a trailing comment from the value
            let value = match value.split_once('#') {
                Some((v, _)) => v.trim(),
                None => value.trim(),
            };
            if values.insert(full.clone(), value.to_string()).is_some() {
                return Err(Error::Config(format!("line {n}: duplicate key '{full}'")));
            }
        }
        Ok(Config {
            values,
            read: BTreeSet::new(),
            resolved: BTreeMap::new(),
        })
    }

    /// Parse a configuration file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn record(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    fn parse<T: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => {
                self.read.insert(key.to_string());
                match raw.parse::<T>() {
                    Ok(v) => Ok(Some(v)),
                    Err(_) => Err(Error::Config(format!(
                        "key '{key}': cannot parse '{raw}' as {what}"
                    ))),
                }
            }
        }
    }

    /// Number from `key`, or `default` when absent.
    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.parse::<f64>(key, "a number")?.unwrap_or(default);
        self.record(key, v);
        Ok(v)
    }

    /// Number from `key`, required.
    pub fn require_f64(&mut self, key: &str) -> Result<f64> {
        let v = self
            .parse::<f64>(key, "a number")?
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))?;
        self.record(key, v);
        Ok(v)
    }

    /// Integer count from `key`, or `default` when absent.
    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = self.parse::<usize>(key, "a count")?.unwrap_or(default);
        self.record(key, v);
        Ok(v)
    }

    /// Flag from `key` (`true`/`false`), or `default` when absent.
    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        let v = self.parse::<bool>(key, "a flag")?.unwrap_or(default);
        self.record(key, v);
        Ok(v)
    }

    /// Complex number from `key` in `a+bi` form (plain reals work too),
    /// or `default` when absent.
    pub fn complex_or(&mut self, key: &str, default: Complex64) -> Result<Complex64> {
        let v = self
            .parse::<Complex64>(key, "a complex number like 1.5+2e-3i")?
            .unwrap_or(default);
        self.record(key, v);
        Ok(v)
    }

    /// String from `key`, or `default` when absent.
    pub fn str_or(&mut self, key: &str, default: &str) -> String {
        let v = match self.values.get(key) {
            Some(raw) => {
                self.read.insert(key.to_string());
                raw.clone()
            }
            None => default.to_string(),
        };
        self.record(key, &v);
        v
    }

    /// True when the file provides `key`.
    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Error out on keys present in the file but never read; catches typos
    /// that would otherwise silently fall back to defaults.
    pub fn check_unused(&self) -> Result<()> {
        let unused: Vec<&str> = self
            .values
            .keys()
            .filter(|k| !self.read.contains(*k))
            .map(|k| k.as_str())
            .collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "unrecognized keys: {}",
                unused.join(", ")
            )))
        }
    }

    /// Every key read so far with the value actually used, defaults
    /// included, in sorted order. Embedded in output files for provenance.
    pub fn resolved(&self) -> impl Iterator<Item = (&str, &str)> {
        self.resolved.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Record an extra resolved entry that did not come from the file, for
    /// example the experiment kind or a derived quantity.
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.record(key, value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# rates in units of the mechanical frequency
[system]
kappa = 0.1
gamma_m = 1e-6   # mechanical linewidth
n_m = 10

[drive]
eps_0 = 1.4e4+0i
eps_plus1 = 7e3
";

    #[test]
    fn sections_prefix_their_keys() {
        let mut c = Config::from_str(SAMPLE).unwrap();
        assert_eq!(c.require_f64("system.kappa").unwrap(), 0.1);
        assert_eq!(c.f64_or("system.gamma_m", 0.0).unwrap(), 1e-6);
        assert_eq!(c.f64_or("system.delta_a", 1.0).unwrap(), 1.0);
        assert!(!c.has("system.delta_a"));
        assert!(c.has("drive.eps_0"));
    }

    #[test]
    fn complex_values_accept_both_forms() {
        let mut c = Config::from_str(SAMPLE).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(
            c.complex_or("drive.eps_0", zero).unwrap(),
            Complex64::new(1.4e4, 0.0)
        );
        assert_eq!(
            c.complex_or("drive.eps_plus1", zero).unwrap(),
            Complex64::new(7e3, 0.0)
        );
        assert_eq!(c.complex_or("drive.eps_minus1", zero).unwrap(), zero);
    }

    #[test]
    fn resolved_records_defaults_and_stays_sorted() {
        let mut c = Config::from_str(SAMPLE).unwrap();
        c.f64_or("system.kappa", 0.5).unwrap();
        c.f64_or("system.delta_a", 1.0).unwrap();
        c.note("kind", "steady");
        let lines: Vec<String> = c.resolved().map(|(k, v)| format!("{k} = {v}")).collect();
        assert_eq!(
            lines,
            vec![
                "kind = steady".to_string(),
                "system.delta_a = 1".to_string(),
                "system.kappa = 0.1".to_string(),
            ]
        );
    }

    #[test]
    fn unused_keys_are_flagged() {
        let mut c = Config::from_str(SAMPLE).unwrap();
        c.require_f64("system.kappa").unwrap();
        let err = c.check_unused().unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("drive.eps_0"), "{msg}");
        assert!(msg.contains("system.n_m"), "{msg}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Config::from_str("[system]\nkappa 0.1\n").unwrap_err();
        assert!(format!("{err}").contains("line 2"), "{err}");
        let err = Config::from_str("a = 1\na = 2\n").unwrap_err();
        assert!(format!("{err}").contains("duplicate"), "{err}");
        let err = Config::from_str("[system\nkappa = 1\n").unwrap_err();
        assert!(format!("{err}").contains("line 1"), "{err}");
        let mut c = Config::from_str("kappa = fast\n").unwrap();
        let err = c.require_f64("kappa").unwrap_err();
        assert!(format!("{err}").contains("kappa"), "{err}");
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn missing_required_key_is_a_config_error() {
        let mut c = Config::from_str("").unwrap();
        let err = c.require_f64("system.kappa").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
