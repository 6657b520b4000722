//! Run configuration: defaults, then a flat `key = value` file, then flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dayahead::{BacktestConfig, HwGrid, KRange, Method, SplitSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected 'key = value'")]
    Syntax { path: String, line: usize },
    #[error("unknown configuration key '{0}'")]
    UnknownKey(String),
    #[error("invalid value '{value}' for '{key}': {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One independent backtest per column.
    Univariate,
    /// A single backtest over all columns jointly.
    Multivariate,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "univariate" | "uni" => Ok(Mode::Univariate),
            "multivariate" | "multi" => Ok(Mode::Multivariate),
            _ => Err("expected 'univariate' or 'multivariate'".into()),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Univariate => "univariate",
            Mode::Multivariate => "multivariate",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub model: Option<PathBuf>,
    /// Samples per day.
    pub h: usize,
    /// Fixed cluster count for `train`; `None` selects k on validation data.
    pub k: Option<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
    pub split: SplitSpec,
    pub methods: Vec<Method>,
    pub mode: Mode,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
    pub ar_order: Option<usize>,
    pub hw_grid: HwGrid,
}

impl Default for RunConfig {
    fn default() -> Self {
        let range = KRange::default();
        Self {
            input: None,
            output_dir: PathBuf::from("."),
            model: None,
            h: 96,
            k: None,
            k_min: range.min,
            k_max: range.max,
            seed: 0,
            split: SplitSpec::default(),
            methods: Method::ALL.to_vec(),
            mode: Mode::Univariate,
            jobs: None,
            ar_order: None,
            hw_grid: HwGrid::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "input", "output-dir", "model", "h", "k", "k-min", "k-max", "seed", "split", "methods", "mode",
    "jobs", "ar-order", "hw-grid",
];

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V, ConfigError>
where
    V::Err: fmt::Display,
{
    value.trim().parse().map_err(|e: V::Err| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

fn parse_list<V: FromStr>(key: &str, value: &str) -> Result<Vec<V>, ConfigError>
where
    V::Err: fmt::Display,
{
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn positive(key: &str, value: &str) -> Result<usize, ConfigError> {
    match parse::<usize>(key, value)? {
        0 => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
            reason: "must be positive".into(),
        }),
        v => Ok(v),
    }
}

impl RunConfig {
    /// Sets one key. Underscores and dashes are interchangeable in key names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim().to_ascii_lowercase().replace('_', "-");
        let bad = |reason: String| ConfigError::BadValue {
            key: key.clone(),
            value: value.into(),
            reason,
        };
        match key.as_str() {
            "input" => self.input = Some(PathBuf::from(value.trim())),
            "output-dir" => self.output_dir = PathBuf::from(value.trim()),
            "model" => self.model = Some(PathBuf::from(value.trim())),
            "h" => self.h = positive(&key, value)?,
            "k" => self.k = Some(positive(&key, value)?),
            "k-min" => self.k_min = positive(&key, value)?,
            "k-max" => self.k_max = positive(&key, value)?,
            "seed" => self.seed = parse(&key, value)?,
            "split" => {
                let parts: Vec<f64> = parse_list(&key, value)?;
                let [a, b, c] = parts[..] else {
                    return Err(bad("expected three fractions".into()));
                };
                self.split = SplitSpec::new(a, b, c).map_err(|e| bad(e.to_string()))?;
            }
            "methods" => {
                let methods: Vec<Method> = parse_list(&key, value)?;
                if methods.is_empty() {
                    return Err(bad("no methods listed".into()));
                }
                self.methods = methods;
            }
            "mode" => self.mode = parse(&key, value)?,
            "jobs" => self.jobs = Some(positive(&key, value)?),
            "ar-order" => self.ar_order = Some(positive(&key, value)?),
            "hw-grid" => {
                self.hw_grid = HwGrid::uniform(parse_list(&key, value)?).map_err(|e| bad(e.to_string()))?
            }
            _ => return Err(ConfigError::UnknownKey(key)),
        }
        Ok(())
    }

    /// Applies a flat config file. `#`/`;` start comments; `[section]` lines are ignored.
    pub fn apply_str(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: origin.into(),
                line: i + 1,
            })?;
            self.set(key, value.trim().trim_matches('"'))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_str(&text, &path.display().to_string())
    }

    pub fn k_range(&self) -> Result<KRange, dayahead::Error> {
        KRange::new(self.k_min, self.k_max)
    }

    pub fn backtest(&self, dataset_id: &str) -> Result<BacktestConfig, dayahead::Error> {
        let mut cfg = BacktestConfig::new(self.h);
        cfg.split = self.split;
        cfg.k_range = self.k_range()?;
        cfg.seed = self.seed;
        cfg.ar_order = self.ar_order;
        cfg.hw_grid = self.hw_grid.clone();
        cfg.dataset_id = dataset_id.into();
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_override() {
        let mut cfg = RunConfig::default();
        cfg.apply_str(
            "# comment\n[run]\nh = 24\nk_max = 10\nmethods = dayahead, meanday\nsplit = 0.6,0.2,0.2\nmode = multivariate\n",
            "test.ini",
        )
        .unwrap();
        assert_eq!(cfg.h, 24);
        assert_eq!(cfg.k_max, 10);
        assert_eq!(cfg.methods, vec![Method::DayAhead, Method::MeanDay]);
        assert_eq!(cfg.mode, Mode::Multivariate);
        assert_eq!(cfg.split.train, 0.6);
        cfg.set("h", "48").unwrap();
        assert_eq!(cfg.h, 48);
    }

    #[test]
    fn every_key_is_settable() {
        let samples = [
            "in.csv", "out", "m.json", "4", "3", "2", "9", "7", "0.7,0.15,0.15", "ar,hw", "uni", "2",
            "5", "0.2,0.8",
        ];
        let mut cfg = RunConfig::default();
        for (key, value) in KEYS.iter().zip(samples) {
            cfg.set(key, value).unwrap();
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = RunConfig::default();
        assert!(matches!(cfg.set("colour", "red"), Err(ConfigError::UnknownKey(_))));
        assert!(cfg.set("h", "0").is_err());
        assert!(cfg.set("split", "0.5,0.5").is_err());
        assert!(cfg.set("split", "0.9,0.9,0.9").is_err());
        assert!(cfg.set("methods", "dayahead,arima").is_err());
        assert!(cfg.set("hw-grid", "1.5").is_err());
        assert!(matches!(
            cfg.apply_str("h 24\n", "x.ini"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }
}
