use super::config::{Command, RunConfig};
use super::ScenarioError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    /// Fail beats Inconclusive beats Pass.
    pub fn combine(self, other: Status) -> Status {
        match (self, other) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
            _ => Status::Pass,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Inconclusive => 2,
            Status::Fail => 3,
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    AtMost,
    AtLeast,
}

/// How a check value is recomputed from a CSV artifact. Empty cells are
/// skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reduce", rename_all = "snake_case")]
pub enum Reduce {
    MaxAbs { column: String },
    Max { column: String },
    Min { column: String },
    First { column: String },
    Last { column: String },
    /// min over rows of envelope − |value|
    EnvelopeMargin { value: String, envelope: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub file: String,
    #[serde(flatten)]
    pub reduce: Reduce,
}

/// One numeric claim: the value, the operation and grid that produced it,
/// and its margin against the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub operation: String,
    pub grid: String,
    pub value: f64,
    pub threshold: f64,
    pub sense: Sense,
    pub margin: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    /// Set for fault-injection checks, which are supposed to fail.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expected_failure: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: &str, operation: &str, grid: &str, value: f64, sense: Sense, threshold: f64) -> Self {
        let margin = match sense {
            Sense::AtMost => threshold - value,
            Sense::AtLeast => value - threshold,
        };
        let status = if margin >= 0.0 { Status::Pass } else { Status::Fail };
        Self {
            name: name.into(),
            operation: operation.into(),
            grid: grid.into(),
            value,
            threshold,
            sense,
            margin,
            status,
            source: None,
            expected_failure: false,
            note: None,
        }
    }

    /// A yes/no claim recorded as value 1 (true) or 0 against threshold 1.
    pub fn flag(name: &str, operation: &str, grid: &str, ok: bool) -> Self {
        Self::new(name, operation, grid, if ok { 1.0 } else { 0.0 }, Sense::AtLeast, 1.0)
    }

    pub fn from_csv(mut self, file: &str, reduce: Reduce) -> Self {
        self.source = Some(Source { file: file.into(), reduce });
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn expect_failure(mut self) -> Self {
        self.expected_failure = true;
        self
    }

    /// Status after accounting for expected failures.
    pub fn effective(&self) -> Status {
        if !self.expected_failure {
            return self.status;
        }
        match self.status {
            Status::Fail => Status::Pass,
            Status::Pass => Status::Fail,
            Status::Inconclusive => Status::Inconclusive,
        }
    }
}

/// Numeric table written as CSV with a header row. NaN cells are left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, ScenarioError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| cell(*v)))?;
        }
        let bytes = w.into_inner().map_err(|e| ScenarioError::Artifact(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| ScenarioError::Artifact(e.to_string()))
    }
}

fn column(text: &str, name: &str) -> Result<Vec<f64>, ScenarioError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let idx = r
        .headers()?
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| ScenarioError::Artifact(format!("no column {name:?}")))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let cell = rec.get(idx).unwrap_or("");
        out.push(if cell.is_empty() {
            f64::NAN
        } else {
            cell.parse().map_err(|_| ScenarioError::Artifact(format!("bad number {cell:?} in {name}")))?
        });
    }
    Ok(out)
}

/// Recomputes a check value from CSV text.
pub fn reduce_csv(text: &str, reduce: &Reduce) -> Result<f64, ScenarioError> {
    let present = |v: Vec<f64>| v.into_iter().filter(|x| !x.is_nan()).collect::<Vec<_>>();
    let empty = || ScenarioError::Artifact("column has no values".into());
    match reduce {
        Reduce::MaxAbs { column: c } => Ok(present(column(text, c)?).iter().fold(0.0f64, |m, v| m.max(v.abs()))),
        Reduce::Max { column: c } => present(column(text, c)?).into_iter().reduce(f64::max).ok_or_else(empty),
        Reduce::Min { column: c } => present(column(text, c)?).into_iter().reduce(f64::min).ok_or_else(empty),
        Reduce::First { column: c } => present(column(text, c)?).first().copied().ok_or_else(empty),
        Reduce::Last { column: c } => present(column(text, c)?).last().copied().ok_or_else(empty),
        Reduce::EnvelopeMargin { value, envelope } => {
            let v = column(text, value)?;
            let e = column(text, envelope)?;
            v.iter()
                .zip(&e)
                .filter(|(a, b)| !a.is_nan() && !b.is_nan())
                .map(|(a, b)| b - a.abs())
                .reduce(f64::min)
                .ok_or_else(empty)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub command: Command,
    /// sha256 of the canonical JSON of `config`.
    pub input_hash: String,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub verdict: Status,
    /// Command-specific results.
    pub data: serde_json::Value,
    pub files: Vec<FileEntry>,
    /// sha256 of this record serialized with an empty record_hash.
    pub record_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub name: String,
    pub status: Status,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expected_failure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub command: Command,
    pub input_hash: String,
    pub record_hash: String,
    pub verdict: Status,
    pub checks: Vec<CertificateEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Overall verdict; an empty check list is inconclusive.
pub fn verdict(checks: &[Check]) -> Status {
    if checks.is_empty() {
        return Status::Inconclusive;
    }
    checks.iter().fold(Status::Pass, |v, c| v.combine(c.effective()))
}

impl OutputRecord {
    pub fn seal(mut self) -> Result<Self, ScenarioError> {
        self.record_hash = String::new();
        let text = serde_json::to_string(&self)?;
        self.record_hash = sha256_hex(text.as_bytes());
        Ok(self)
    }

    pub fn certificate(&self) -> Certificate {
        Certificate {
            command: self.command,
            input_hash: self.input_hash.clone(),
            record_hash: self.record_hash.clone(),
            verdict: self.verdict,
            checks: self
                .checks
                .iter()
                .map(|c| CertificateEntry {
                    name: c.name.clone(),
                    status: c.status,
                    margin: c.margin,
                    expected_failure: c.expected_failure,
                })
                .collect(),
        }
    }
}

/// Re-evaluates every check that names a CSV source, using `read` to fetch
/// the file contents. Returns (name, recorded value, recomputed value).
pub fn roundtrip<F>(checks: &[Check], mut read: F) -> Result<Vec<(String, f64, f64)>, ScenarioError>
where
    F: FnMut(&str) -> Result<String, ScenarioError>,
{
    let mut out = Vec::new();
    for c in checks {
        if let Some(src) = &c.source {
            let text = read(&src.file)?;
            out.push((c.name.clone(), c.value, reduce_csv(&text, &src.reduce)?));
        }
    }
    Ok(out)
}

/// Shortest round-trip text, in exponent form far from unit scale.
fn cell(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        String::new()
    } else if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}
