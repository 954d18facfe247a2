//! Dataset files.
//!
//! JSONL: a header line `{"T": <horizon>}` followed by one object per
//! process, `{"id": …, "label": …, "events": […]}`.
//!
//! Text: an optional header line `# T = <horizon>`, then one line of
//! whitespace-separated event times per process. An empty line is the
//! empty process. Other lines starting with `#` are comments.
//!
//! Numbers are written in the shortest decimal form that parses back to
//! the same `f64`, so a save/load round trip is bit exact.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::PointProcess;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Text,
}

impl Format {
    /// `.jsonl`/`.json` map to JSONL, anything else to text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Format::Jsonl,
            _ => Format::Text,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(Format::Jsonl),
            "text" | "txt" => Ok(Format::Text),
            other => Err(Error::arg(format!("unknown format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Jsonl => "jsonl",
            Format::Text => "text",
        })
    }
}

/// A set of processes sharing one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub horizon: f64,
    pub processes: Vec<PointProcess>,
}

impl Dataset {
    pub fn new(horizon: f64, processes: Vec<PointProcess>) -> Result<Self> {
        if let Some(p) = processes.iter().find(|p| p.horizon() != horizon) {
            return Err(Error::DomainMismatch(format!(
                "process horizon {} differs from dataset horizon {horizon}",
                p.horizon()
            )));
        }
        Ok(Self { horizon, processes })
    }

    pub fn len(&self) -> usize {
        self.processes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processes.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(rename = "T")]
    horizon: f64,
}

#[derive(Serialize, Deserialize)]
struct Record {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    events: Vec<f64>,
}

/// Loads a dataset. `horizon` is required for text files without a header
/// and overrides nothing when a header is present (a conflict is an error).
pub fn load_processes(path: &Path, format: Format, horizon: Option<f64>) -> Result<Dataset> {
    let file = fs::File::open(path)?;
    read_processes(BufReader::new(file), format, horizon)
}

pub fn read_processes<R: Read>(reader: R, format: Format, horizon: Option<f64>) -> Result<Dataset> {
    let lines: Vec<String> = BufReader::new(reader).lines().collect::<std::io::Result<_>>()?;
    match format {
        Format::Jsonl => parse_jsonl(&lines, horizon),
        Format::Text => parse_text(&lines, horizon),
    }
}

fn resolve_horizon(header: Option<f64>, given: Option<f64>) -> Result<f64> {
    match (header, given) {
        (Some(h), Some(g)) if h != g => Err(Error::DomainMismatch(format!(
            "file header T={h} conflicts with requested T={g}"
        ))),
        (Some(h), _) => Ok(h),
        (None, Some(g)) => Ok(g),
        (None, None) => Err(Error::Parse {
            line: 1,
            message: "missing T header and no horizon supplied".into(),
        }),
    }
}

fn build(events: Vec<f64>, horizon: f64, line: usize) -> Result<PointProcess> {
    if let Some(bad) = events
        .iter()
        .find(|e| !(e.is_finite() && **e >= 0.0 && **e <= horizon))
    {
        return Err(Error::Parse {
            line,
            message: format!("event {bad} outside [0, {horizon}]"),
        });
    }
    if events.windows(2).any(|w| w[0] > w[1]) {
        log::warn!("line {line}: events not sorted; sorting");
    }
    PointProcess::from_unsorted(events, horizon).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })
}

fn parse_jsonl(lines: &[String], horizon: Option<f64>) -> Result<Dataset> {
    let mut iter = lines
        .iter()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut header = None;
    let mut pending = None;
    if let Some((n, first)) = iter.next() {
        match serde_json::from_str::<Header>(first) {
            Ok(h) if !first.contains("\"events\"") => header = Some(h.horizon),
            _ => pending = Some((n, first)),
        }
    }
    let horizon = resolve_horizon(header, horizon)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Parse {
            line: 1,
            message: format!("T must be positive, got {horizon}"),
        });
    }
    let mut processes = Vec::new();
    for (n, line) in pending.into_iter().chain(iter) {
        let rec: Record = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: n,
            message: format!("malformed record: {e}"),
        })?;
        let mut p = build(rec.events, horizon, n)?;
        p.id = rec.id;
        p.label = rec.label;
        processes.push(p);
    }
    Dataset::new(horizon, processes)
}

fn parse_text_header(line: &str) -> Option<f64> {
    let body = line.trim().strip_prefix('#')?.trim();
    let (key, value) = body.split_once('=')?;
    if key.trim() == "T" {
        value.trim().parse().ok()
    } else {
        None
    }
}

fn parse_text(lines: &[String], horizon: Option<f64>) -> Result<Dataset> {
    let header = lines.first().and_then(|l| parse_text_header(l));
    let horizon = resolve_horizon(header, horizon)?;
    let mut processes = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let n = i + 1;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        let events = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: n,
                    message: format!("not a number: `{tok}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let index = processes.len();
        processes.push(build(events, horizon, n)?.with_id(format!("p{index:05}")));
    }
    Dataset::new(horizon, processes)
}

pub fn save_processes(dataset: &Dataset, path: &Path, format: Format) -> Result<()> {
    let mut file = fs::File::create(path)?;
    write_processes(dataset, &mut file, format)?;
    file.flush()?;
    Ok(())
}

pub fn write_processes<W: Write>(dataset: &Dataset, out: &mut W, format: Format) -> Result<()> {
    match format {
        Format::Jsonl => {
            let header = serde_json::to_string(&Header {
                horizon: dataset.horizon,
            })
            .map_err(|e| Error::Numerical(e.to_string()))?;
            writeln!(out, "{header}")?;
            for p in &dataset.processes {
                let rec = Record {
                    id: p.id.clone(),
                    label: p.label.clone(),
                    events: p.events().to_vec(),
                };
                let line = serde_json::to_string(&rec).map_err(|e| Error::Numerical(e.to_string()))?;
                writeln!(out, "{line}")?;
            }
        }
        Format::Text => {
            writeln!(out, "# T = {}", dataset.horizon)?;
            for p in &dataset.processes {
                let line: Vec<String> = p.events().iter().map(|e| e.to_string()).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
    }
    Ok(())
}
