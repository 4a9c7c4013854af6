//! Record files, profile documents and delimited output tables.
//!
//! A record file is UTF-8 text: optional `# key=value` metadata lines
//! (`subject_id`, `sample_rate_hz`, `quantization_bits`), a header
//! `time_s,ppg[,motion]` and one sample per line. The time column is
//! advisory; when `sample_rate_hz` is absent the rate is inferred from it.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use ppg_rectify_core::pipeline::{SubjectProfile, PROFILE_FORMAT_VERSION};
use ppg_rectify_core::PpgRecord;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn load_record(path: &Path) -> Result<PpgRecord> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let fallback_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_record(&text, path, &fallback_id)
}

/// Parses record text; `origin` only labels errors.
pub fn parse_record(text: &str, origin: &Path, fallback_id: &str) -> Result<PpgRecord> {
    let mut subject_id = None;
    let mut rate = None;
    let mut bits = None;
    let mut header: Option<(usize, bool)> = None;
    let (mut times, mut ppg, mut motion) = (Vec::new(), Vec::new(), Vec::new());

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if header.is_some() {
                continue;
            }
            let Some((k, v)) = meta.split_once('=') else {
                continue;
            };
            let v = v.trim();
            match k.trim() {
                "subject_id" => subject_id = Some(v.to_string()),
                "sample_rate_hz" => {
                    rate = Some(v.parse::<f64>().map_err(|_| {
                        CliError::parse(origin, line_no, format!("sample_rate_hz '{v}' is not a number"))
                    })?)
                }
                "quantization_bits" => {
                    bits = Some(v.parse::<u32>().map_err(|_| {
                        CliError::parse(origin, line_no, format!("quantization_bits '{v}' is not an integer"))
                    })?)
                }
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some((width, has_motion)) = header else {
            header = Some(parse_header(&fields).ok_or_else(|| {
                CliError::parse(origin, line_no, format!("malformed header '{line}', expected time_s,ppg[,motion]"))
            })?);
            continue;
        };
        if fields.len() != width {
            return Err(CliError::parse(
                origin,
                line_no,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::parse(origin, line_no, format!("{name} value '{}' is not numeric", fields[i])))
        };
        times.push(num(0, "time")?);
        ppg.push(num(1, "ppg")?);
        if has_motion {
            motion.push(num(2, "motion")?);
        }
    }
    if header.is_none() {
        return Err(CliError::parse(origin, 1, "missing header time_s,ppg[,motion]"));
    }
    if ppg.is_empty() {
        return Err(CliError::parse(origin, text.lines().count().max(1), "record has no samples"));
    }
    let rate = match rate {
        Some(r) => r,
        None => infer_rate(&times).ok_or_else(|| {
            CliError::parse(origin, 1, "time column is not increasing; add '# sample_rate_hz=...'")
        })?,
    };
    let id = subject_id.unwrap_or_else(|| fallback_id.to_string());
    let mut record = PpgRecord::new(id, rate, ppg)?;
    if header.is_some_and(|(_, m)| m) {
        record = record.with_motion(motion)?;
    }
    if let Some(b) = bits {
        record = record.with_quantization_bits(b);
    }
    Ok(record)
}

fn parse_header(fields: &[&str]) -> Option<(usize, bool)> {
    let time_ok = matches!(fields.first(), Some(&"time_s") | Some(&"t"));
    match fields {
        [_, "ppg"] if time_ok => Some((2, false)),
        [_, "ppg", "motion"] if time_ok => Some((3, true)),
        _ => None,
    }
}

/// `1 / median(dt)`, snapped to the nearest integer when within 1%. A single
/// sample gets the nominal rate.
fn infer_rate(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return Some(PpgRecord::NOMINAL_RATE_HZ);
    }
    let mut dt: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    if dt.iter().any(|&d| !(d > 0.0)) {
        return None;
    }
    dt.sort_by(f64::total_cmp);
    let fs = 1.0 / dt[dt.len() / 2];
    let snapped = fs.round();
    Some(if snapped > 0.0 && (fs - snapped).abs() <= 0.01 * snapped { snapped } else { fs })
}

pub fn record_to_string(record: &PpgRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!("# subject_id={}\n", record.subject_id()));
    out.push_str(&format!("# sample_rate_hz={}\n", record.sample_rate_hz()));
    if let Some(b) = record.quantization_bits() {
        out.push_str(&format!("# quantization_bits={b}\n"));
    }
    let fs = record.sample_rate_hz();
    match record.motion() {
        Some(m) => {
            out.push_str("time_s,ppg,motion\n");
            for (i, (x, y)) in record.samples().iter().zip(m).enumerate() {
                out.push_str(&format!("{},{x},{y}\n", i as f64 / fs));
            }
        }
        None => {
            out.push_str("time_s,ppg\n");
            for (i, x) in record.samples().iter().enumerate() {
                out.push_str(&format!("{},{x}\n", i as f64 / fs));
            }
        }
    }
    out
}

pub fn save_record(record: &PpgRecord, path: &Path) -> Result<()> {
    write_text(path, &record_to_string(record))
}

pub fn save_profile(profile: &SubjectProfile, path: &Path) -> Result<()> {
    profile.validate()?;
    save_toml(profile, path)
}

pub fn load_profile(path: &Path) -> Result<SubjectProfile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_profile(&text, path)
}

pub fn parse_profile(text: &str, origin: &Path) -> Result<SubjectProfile> {
    if text.trim().is_empty() {
        return Err(CliError::persistence(origin, "profile file is empty"));
    }
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::persistence(origin, format!("profile is not valid TOML: {e}")))?;
    match table.get("format_version").and_then(toml::Value::as_integer) {
        Some(v) if v == i64::from(PROFILE_FORMAT_VERSION) => {}
        Some(v) => {
            return Err(CliError::persistence(
                origin,
                format!("profile format version {v}, this build reads version {PROFILE_FORMAT_VERSION}"),
            ))
        }
        None => return Err(CliError::persistence(origin, "profile lacks format_version")),
    }
    let profile: SubjectProfile =
        toml::from_str(text).map_err(|e| CliError::persistence(origin, format!("incomplete profile: {e}")))?;
    profile.validate().map_err(|e| CliError::persistence(origin, e.to_string()))?;
    Ok(profile)
}

pub fn save_toml<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| CliError::persistence(path, e.to_string()))?;
    write_text(path, &text)
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim().is_empty() {
        return Err(CliError::persistence(path, "file is empty"));
    }
    toml::from_str(&text).map_err(|e| CliError::persistence(path, e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Comma-delimited table with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, D>(&mut self, row: I)
    where
        I: IntoIterator<Item = D>,
        D: Display,
    {
        let row: Vec<String> = row.into_iter().map(|d| d.to_string()).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (_, head) = lines.next().ok_or_else(|| CliError::parse(path, 1, "table has no header"))?;
        let mut t = Table {
            header: head.split(',').map(|s| s.trim().to_string()).collect(),
            rows: Vec::new(),
        };
        for (i, l) in lines {
            let row: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != t.header.len() {
                return Err(CliError::parse(
                    path,
                    i + 1,
                    format!("expected {} fields, found {}", t.header.len(), row.len()),
                ));
            }
            t.rows.push(row);
        }
        Ok(t)
    }

    /// Values of column `name` parsed as `T`.
    pub fn parse_column<T: std::str::FromStr>(&self, name: &str, origin: &Path) -> Result<Vec<T>> {
        let c = self
            .column(name)
            .ok_or_else(|| CliError::parse(origin, 1, format!("table has no '{name}' column")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[c].parse::<T>()
                    .map_err(|_| CliError::parse(origin, i + 2, format!("'{}' in column {name} is invalid", r[c])))
            })
            .collect()
    }
}
