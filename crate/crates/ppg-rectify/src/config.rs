//! `key = value` run configuration. Command-line flags override the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, Result};

pub const DEFAULT_RETENTION: f64 = 0.95;
pub const DEFAULT_RECAL_THRESHOLD: f64 = 0.7;
pub const DEFAULT_WINDOW_S: f64 = 8.0;
pub const DEFAULT_SHIFT_S: f64 = 2.0;

const KNOWN_KEYS: [&str; 6] = ["seed", "out_dir", "retention", "recal_threshold", "window_s", "shift_s"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Keys accept `-` or `_`; `#` starts a comment line.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::parse(origin, i + 1, format!("expected key = value, found '{line}'")))?;
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::parse(origin, i + 1, format!("unknown key '{key}'")));
            }
            let value = v.trim().trim_matches('"').to_string();
            if entries.insert(key.clone(), (i + 1, value)).is_some() {
                return Err(CliError::parse(origin, i + 1, format!("duplicate key '{key}'")));
            }
        }
        Ok(Self {
            path: origin.to_path_buf(),
            entries,
        })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::parse(&self.path, *line, format!("invalid value '{v}' for {key}"))),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, (_, v))| (k.as_str(), v.as_str()))
    }
}

/// Values given on the command line; `None` defers to the file, then the default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub retention: Option<f64>,
    pub recal_threshold: Option<f64>,
    pub window_s: Option<f64>,
    pub shift_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub retention: f64,
    pub recal_threshold: f64,
    pub window_s: f64,
    pub shift_s: f64,
    /// Whether retention or the threshold were set explicitly; otherwise a
    /// loaded profile keeps its own values.
    pub retention_explicit: bool,
    pub recal_explicit: bool,
}

impl RunSettings {
    pub fn resolve(file: Option<&ConfigFile>, flags: &Overrides) -> Result<Self> {
        fn pick<T: FromStr + Clone>(flag: &Option<T>, file: Option<&ConfigFile>, key: &str) -> Result<Option<T>> {
            if flag.is_some() {
                return Ok(flag.clone());
            }
            file.map_or(Ok(None), |f| f.get(key))
        }
        let retention = pick(&flags.retention, file, "retention")?;
        let recal = pick(&flags.recal_threshold, file, "recal_threshold")?;
        let s = Self {
            seed: pick(&flags.seed, file, "seed")?.unwrap_or(0),
            out_dir: pick(&flags.out_dir, file, "out_dir")?.unwrap_or_else(|| PathBuf::from(".")),
            retention: retention.unwrap_or(DEFAULT_RETENTION),
            recal_threshold: recal.unwrap_or(DEFAULT_RECAL_THRESHOLD),
            window_s: pick(&flags.window_s, file, "window_s")?.unwrap_or(DEFAULT_WINDOW_S),
            shift_s: pick(&flags.shift_s, file, "shift_s")?.unwrap_or(DEFAULT_SHIFT_S),
            retention_explicit: retention.is_some(),
            recal_explicit: recal.is_some(),
        };
        if !(s.retention > 0.0 && s.retention <= 1.0) {
            return Err(CliError::Usage(format!("retention {} outside (0, 1]", s.retention)));
        }
        if !(s.recal_threshold > 0.0 && s.recal_threshold < 1.0) {
            return Err(CliError::Usage(format!("recal-threshold {} outside (0, 1)", s.recal_threshold)));
        }
        if !(s.window_s > 0.0 && s.shift_s > 0.0) {
            return Err(CliError::Usage("window-s and shift-s must be positive".into()));
        }
        Ok(s)
    }

    /// Resolved values as strings, for the run manifest.
    pub fn describe(&self) -> BTreeMap<String, String> {
        [
            ("seed", self.seed.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("retention", self.retention.to_string()),
            ("recal_threshold", self.recal_threshold.to_string()),
            ("window_s", self.window_s.to_string()),
            ("shift_s", self.shift_s.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}
