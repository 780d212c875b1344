//! Plain-text `key = value` configuration.
//!
//! One pair per line, `#` starts a comment. System keys are the
//! [`PARAM_KEYS`](crate::params::PARAM_KEYS); experiment presets may also set
//! `var`, `grid`, `methods`, `series.<KEY>`, `blocks`, `warmup`, `seed`,
//! `replicas` and `battery`. Later lines win.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::{SystemParams, PARAM_KEYS};

const EXPERIMENT_KEYS: [&str; 8] = ["var", "grid", "methods", "blocks", "warmup", "seed", "replicas", "battery"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub params: SystemParams,
    /// Experiment settings, raw. `series.*` keys keep their prefix.
    pub experiment: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if PARAM_KEYS.contains(&key) {
            self.params.set(key, value)
        } else if EXPERIMENT_KEYS.contains(&key) || key.strip_prefix("series.").is_some_and(|k| PARAM_KEYS.contains(&k))
        {
            self.experiment.insert(key.to_string(), value.to_string());
            Ok(())
        } else {
            Err(Error::Config(format!("unknown key `{key}`")))
        }
    }

    /// Applies a `key=value` command-line override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not `key=value`")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn experiment_value(&self, key: &str) -> Option<&str> {
        self.experiment.get(key).map(String::as_str)
    }

    /// `series.<KEY>` entries as `(KEY, raw list)`, in key order.
    pub fn series(&self) -> Vec<(String, String)> {
        self.experiment
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("series.").map(|k| (k.to_string(), v.clone())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_comments_units_and_presets() {
        let text = "\
# geometry
d_SD = 50
P_S = 20 dbm   # source
N0 = 1e-9w
series.N = 2,4,6
grid = 10:36:2dbm

L=10
";
        let cfg = Config::parse(text).unwrap();
        assert_relative_eq!(cfg.params.p_s, 0.1, max_relative = 1e-14);
        assert_eq!(cfg.params.n0, 1e-9);
        assert_eq!(cfg.params.levels, 10);
        assert_eq!(cfg.experiment_value("grid"), Some("10:36:2dbm"));
        assert_eq!(cfg.series(), vec![("N".to_string(), "2,4,6".to_string())]);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(Config::parse("foo = 1").is_err());
        assert!(Config::parse("P_S 30dbm").is_err());
        assert!(Config::parse("series.foo = 1,2").is_err());
        let err = Config::parse("eta = 0.5\nK = ten").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn overrides_apply_last() {
        let mut cfg = Config::parse("N = 2").unwrap();
        cfg.apply_override("N=6").unwrap();
        assert_eq!(cfg.params.antennas, 6);
        assert!(cfg.apply_override("N").is_err());
    }
}
