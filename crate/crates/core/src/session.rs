//! Five-channel session container and its CSV/JSON on-disk form.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Compression,
    Pressure,
    Velocity,
    Force,
    Pmouth,
}

/// Canonical channel order. Every multi-channel tensor in the crate uses it.
pub const CHANNELS: [Channel; 5] = [
    Channel::Compression,
    Channel::Pressure,
    Channel::Velocity,
    Channel::Force,
    Channel::Pmouth,
];

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Compression => "compression",
            Channel::Pressure => "pressure",
            Channel::Velocity => "velocity",
            Channel::Force => "force",
            Channel::Pmouth => "pmouth",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CHANNELS
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::MissingChannel(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSession {
    pub patient_id: String,
    pub sample_rate: f64,
    channels: BTreeMap<Channel, Vec<f64>>,
    pub is_clean: bool,
}

impl SignalSession {
    pub fn new(
        patient_id: impl Into<String>,
        sample_rate: f64,
        channels: BTreeMap<Channel, Vec<f64>>,
        is_clean: bool,
    ) -> Result<Self> {
        for c in CHANNELS {
            if !channels.contains_key(&c) {
                return Err(Error::MissingChannel(c.name().to_string()));
            }
        }
        let len = channels[&Channel::Compression].len();
        for (c, v) in &channels {
            if v.len() != len {
                return Err(Error::Schema(format!(
                    "channel {c} has {} samples, expected {len}",
                    v.len()
                )));
            }
            if is_clean && v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!(
                    "clean session channel {c} contains non-finite values"
                )));
            }
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid("sample_rate must be positive"));
        }
        Ok(Self {
            patient_id: patient_id.into(),
            sample_rate,
            channels,
            is_clean,
        })
    }

    /// Builds a session from channels given in canonical order.
    pub fn from_columns(
        patient_id: impl Into<String>,
        sample_rate: f64,
        columns: [Vec<f64>; 5],
        is_clean: bool,
    ) -> Result<Self> {
        let channels = CHANNELS.into_iter().zip(columns).collect();
        Self::new(patient_id, sample_rate, channels, is_clean)
    }

    pub fn len(&self) -> usize {
        self.channels[&Channel::Compression].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        &self.channels[&c]
    }

    pub fn channels(&self) -> impl Iterator<Item = (Channel, &[f64])> {
        self.channels.iter().map(|(c, v)| (*c, v.as_slice()))
    }

    /// Replaces one channel; the new data must keep the session length.
    pub fn set_channel(&mut self, c: Channel, data: Vec<f64>) -> Result<()> {
        if data.len() != self.len() {
            return Err(Error::Schema(format!(
                "channel {c} replacement has {} samples, expected {}",
                data.len(),
                self.len()
            )));
        }
        self.channels.insert(c, data);
        Ok(())
    }

    pub fn nan_count(&self) -> usize {
        self.channels
            .values()
            .map(|v| v.iter().filter(|x| x.is_nan()).count())
            .sum()
    }
}

pub const CSV_HEADER: &str = "t,compression,pressure,velocity,force,pmouth";

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        // Display for f64 is the shortest string that parses back exactly.
        format!("{v}")
    }
}

fn parse_value(s: &str) -> Result<f64> {
    match s {
        "NaN" | "nan" => Ok(f64::NAN),
        _ => s
            .parse::<f64>()
            .map_err(|_| Error::Schema(format!("cannot parse `{s}` as a number"))),
    }
}

/// Renders a session in the exchange CSV layout.
pub fn session_to_csv(s: &SignalSession) -> String {
    let mut out = String::with_capacity(s.len() * 96);
    out.push_str(CSV_HEADER);
    out.push('\n');
    let cols: Vec<&[f64]> = CHANNELS.iter().map(|&c| s.channel(c)).collect();
    for i in 0..s.len() {
        out.push_str(&format!("{:.6}", i as f64 / s.sample_rate));
        for col in &cols {
            out.push(',');
            out.push_str(&fmt_value(col[i]));
        }
        out.push('\n');
    }
    out
}

/// Parses the exchange CSV. Returns the five columns and the time column.
pub fn parse_session_csv(text: &str) -> Result<(Vec<f64>, [Vec<f64>; 5])> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    if header.len() != expected.len() {
        for name in &expected[1..] {
            if !header.iter().any(|h| h == name) {
                return Err(Error::MissingChannel(name.to_string()));
            }
        }
        return Err(Error::Schema(format!("unexpected header {}", header.join(","))));
    }
    if header != expected {
        for name in &expected[1..] {
            if !header.iter().any(|h| h == name) {
                return Err(Error::MissingChannel(name.to_string()));
            }
        }
        return Err(Error::Schema(format!(
            "header must be `{CSV_HEADER}`, got `{}`",
            header.join(",")
        )));
    }
    let mut t = Vec::new();
    let mut cols: [Vec<f64>; 5] = Default::default();
    for record in reader.records() {
        let record = record?;
        if record.len() != 6 {
            return Err(Error::Schema(format!(
                "row {} has {} fields",
                t.len() + 1,
                record.len()
            )));
        }
        t.push(parse_value(record.get(0).unwrap_or_default())?);
        for (k, col) in cols.iter_mut().enumerate() {
            col.push(parse_value(record.get(k + 1).unwrap_or_default())?);
        }
    }
    Ok((t, cols))
}

/// Sidecar metadata stored next to every session CSV as `<stem>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSidecar {
    pub patient_id: String,
    pub sample_rate: f64,
    pub is_clean: bool,
    pub generator_version: String,
    /// Free-form provenance: protocol, params, profile, corruption config,
    /// denoising method.
    #[serde(default)]
    pub provenance: BTreeMap<String, serde_json::Value>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `bytes` to `path` through a temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", path.display())))?;
    let tmp = match dir {
        Some(d) => d.join(format!(".{}.tmp", file_name.to_string_lossy())),
        None => PathBuf::from(format!(".{}.tmp", file_name.to_string_lossy())),
    };
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn write_session(path: &Path, s: &SignalSession, sidecar: &SessionSidecar) -> Result<()> {
    write_atomic(path, session_to_csv(s).as_bytes())?;
    let json = serde_json::to_string_pretty(sidecar)?;
    write_atomic(&sidecar_path(path), json.as_bytes())
}

/// Reads a session CSV plus its sidecar. Without a sidecar the patient id is
/// the file stem, the sample rate is inferred from the time column and the
/// session is treated as clean only if it has no NaN.
pub fn read_session(path: &Path) -> Result<(SignalSession, Option<SessionSidecar>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (t, cols) = parse_session_csv(&text)?;
    let side_path = sidecar_path(path);
    let sidecar: Option<SessionSidecar> = if side_path.exists() {
        let raw = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
        Some(serde_json::from_str(&raw).map_err(|e| {
            Error::Schema(format!("{}: {e}", side_path.display()))
        })?)
    } else {
        None
    };
    let (id, rate, clean) = match &sidecar {
        Some(sc) => (sc.patient_id.clone(), sc.sample_rate, sc.is_clean),
        None => {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "unknown".into());
            if t.len() < 2 {
                return Err(Error::Schema("cannot infer sample rate from < 2 rows".into()));
            }
            let rate = ((t.len() - 1) as f64 / (t[t.len() - 1] - t[0])).round();
            let clean = cols.iter().all(|c| c.iter().all(|v| v.is_finite()));
            (id, rate, clean)
        }
    };
    let session = SignalSession::from_columns(id, rate, cols, clean)?;
    Ok((session, sidecar))
}
