//! End-to-end runs: configuration, the seven commands, and their persisted
//! artifacts (record.json, certificate.json and CSV tables).

mod basic;
pub mod config;
mod flows;
pub mod record;
mod verify;

pub use config::{Command, RunConfig, TailSpec, Tolerances};
pub use record::{
    reduce_csv, roundtrip, sha256_hex, verdict, Certificate, CertificateEntry, Check, FileEntry, OutputRecord, Reduce,
    Sense, Source, Status, Table,
};

use crate::cutoffs::CutoffError;
use crate::heatops::HeatError;
use crate::perturb::PerturbError;
use crate::profile::ProfileError;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config error: {0}")]
    Config(String),
    #[error("artifact error: {0}")]
    Artifact(String),
    #[error("separation not resolved: ratio {ratio} at t = {t:e}")]
    SeparationNotResolved { ratio: f64, t: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Cutoff(#[from] CutoffError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
}

impl ScenarioError {
    pub fn is_config(&self) -> bool {
        matches!(self, ScenarioError::Config(_))
    }

    /// 4 for configuration errors, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            4
        } else {
            3
        }
    }
}

/// What a command hands back before persistence.
#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub checks: Vec<Check>,
    pub data: serde_json::Map<String, serde_json::Value>,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn put(&mut self, key: &str, value: impl serde::Serialize) -> Result<(), ScenarioError> {
        self.data.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn merge(&mut self, other: Outcome) {
        self.checks.extend(other.checks);
        self.data.extend(other.data);
        self.tables.extend(other.tables);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: OutputRecord,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    pub fn certificate(&self) -> Certificate {
        self.record.certificate()
    }

    pub fn exit_code(&self) -> i32 {
        self.record.verdict.exit_code()
    }

    /// Writes record.json, certificate.json and the CSV tables into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), ScenarioError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("record.json"), serde_json::to_string_pretty(&self.record)? + "\n")?;
        std::fs::write(dir.join("certificate.json"), serde_json::to_string_pretty(&self.certificate())? + "\n")?;
        for a in &self.artifacts {
            std::fs::write(dir.join(&a.name), &a.contents)?;
        }
        Ok(())
    }
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    match command {
        Command::Profile => basic::profile(cfg),
        Command::Threshold => basic::threshold(cfg),
        Command::Nonexist => basic::nonexist(cfg),
        Command::Perturb => flows::perturb(cfg),
        Command::Nonunique => flows::nonunique(cfg),
        Command::Ball => flows::ball(cfg),
        Command::Verify => verify::verify(cfg),
    }
}

/// Runs the configured command. Configuration problems are returned as
/// errors; numerical failures become failed checks in the record.
pub fn run(config: &RunConfig) -> Result<RunOutput, ScenarioError> {
    config.validate()?;
    let command = config.command()?;
    let mut echo = config.clone();
    echo.output_dir = None;
    let input_hash = sha256_hex(serde_json::to_string(&echo)?.as_bytes());

    let outcome = match dispatch(command, &echo) {
        Ok(o) => o,
        Err(e) if e.is_config() => return Err(e),
        Err(e) => {
            let mut o = Outcome::default();
            o.checks.push(Check::flag(&format!("{command}.run"), command.name(), "-", false).note(e.to_string()));
            o
        }
    };
    let Outcome { mut checks, data, tables } = outcome;

    let mut artifacts = Vec::with_capacity(tables.len());
    let mut files = Vec::with_capacity(tables.len());
    for t in &tables {
        let contents = t.to_csv()?;
        files.push(FileEntry { name: t.name.clone(), sha256: sha256_hex(contents.as_bytes()), rows: t.rows.len() });
        artifacts.push(Artifact { name: t.name.clone(), contents });
    }
    let pairs = roundtrip(&checks, |name| {
        artifacts
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.contents.clone())
            .ok_or_else(|| ScenarioError::Artifact(format!("check source {name} was not produced")))
    })?;
    if !pairs.is_empty() {
        let worst = pairs.iter().fold(0.0f64, |m, (_, a, b)| {
            let d = if a.to_bits() == b.to_bits() { 0.0 } else { (a - b).abs() };
            if d.is_nan() {
                f64::INFINITY
            } else {
                m.max(d)
            }
        });
        checks.push(
            Check::new("record.roundtrip", "reduce_csv", "persisted CSV", worst, Sense::AtMost, 0.0)
                .note(format!("{} check values recomputed from CSV", pairs.len())),
        );
    }
    let record = OutputRecord {
        command,
        input_hash,
        config: echo,
        verdict: verdict(&checks),
        checks,
        data: serde_json::Value::Object(data),
        files,
        record_hash: String::new(),
    }
    .seal()?;
    Ok(RunOutput { record, artifacts })
}

/// Reads the CSV files named by the record's checks from `dir` and compares
/// the recomputed values with the recorded ones.
pub fn roundtrip_from_dir(record: &OutputRecord, dir: &Path) -> Result<Vec<(String, f64, f64)>, ScenarioError> {
    roundtrip(&record.checks, |name| Ok(std::fs::read_to_string(dir.join(name))?))
}
