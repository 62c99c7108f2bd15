//! `key = value` configuration files and their merge with command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const KEYS: &[&str] = &[
    "kappa",
    "s",
    "coupling",
    "nth",
    "r",
    "t_end",
    "steps",
    "out",
    "format",
    "threads",
    "seed",
    "noiseless",
    "plot_script",
    "g_min",
    "g_max",
    "g_points",
    "ntraj",
    "max_points",
    "reduction",
    "axis",
];

/// Parsed file contents. `axis` may repeat; every other key may not.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
    axes: Vec<String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = FileConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", lineno + 1))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key `{key}`", lineno + 1);
            }
            if key == "axis" {
                cfg.axes.push(value);
            } else if cfg.values.insert(key.clone(), value).is_some() {
                bail!("line {}: key `{key}` given twice", lineno + 1);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Flag value if given, else the file value parsed as `T`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values.get(key).map(|v| v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: {e}"))).transpose()
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let cfg =
            FileConfig::parse("# preset\ns = 2\n\ncoupling=2.3  # above Gc\naxis = G=0:1:3\naxis = r=1:2:2\n").unwrap();
        assert_eq!(cfg.pick::<f64>(None, "s").unwrap(), Some(2.0));
        assert_eq!(cfg.pick::<f64>(None, "coupling").unwrap(), Some(2.3));
        assert_eq!(cfg.pick::<f64>(None, "r").unwrap(), None);
        assert_eq!(cfg.axes(), ["G=0:1:3", "r=1:2:2"]);
    }

    #[test]
    fn flags_override_file() {
        let cfg = FileConfig::parse("s = 2").unwrap();
        assert_eq!(cfg.pick(Some(1.0), "s").unwrap(), Some(1.0));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(FileConfig::parse("s 2").is_err());
        assert!(FileConfig::parse("temperature = 1").is_err());
        assert!(FileConfig::parse("s = 1\ns = 2").is_err());
        let cfg = FileConfig::parse("s = two").unwrap();
        assert!(cfg.pick::<f64>(None, "s").is_err());
    }

    #[test]
    fn dashed_keys_and_bools() {
        let cfg = FileConfig::parse("t-end = 5\nnoiseless = true").unwrap();
        assert_eq!(cfg.pick::<f64>(None, "t_end").unwrap(), Some(5.0));
        assert!(cfg.flag(false, "noiseless").unwrap());
        assert!(!cfg.flag(false, "plot_script").unwrap());
    }
}
