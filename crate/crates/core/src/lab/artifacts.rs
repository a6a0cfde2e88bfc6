//! Run directories and the files written into them.
//!
//! `metrics.csv` columns: `step, loss, norm_loss, A_<class>...`.
//! `phase.csv` columns: `group_order, hidden, norm_loss, steps, status`.
//! `bias.csv` columns: `k, seed, step_1d, step_2d, delta, censored`.
//! Every JSON sidecar carries `schema_version` and `code_version`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::LabError;
use crate::networks::train::RunRecord;

pub const SCHEMA_VERSION: u32 = 1;

pub fn code_version() -> String {
    format!("gclab {}", env!("CARGO_PKG_VERSION"))
}

/// SHA-256 of the config with its output directory cleared, so moving runs does not change it.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.output_dir = PathBuf::new();
    let text = serde_json::to_string(&c).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Creates `<output_dir>/<experiment>-<hash>`; a rerun gets a fresh `-2`, `-3`, ... suffix
/// rather than overwriting.
pub fn create_run_dir(config: &ExperimentConfig) -> Result<PathBuf, LabError> {
    fs::create_dir_all(&config.output_dir)?;
    let base = format!("{}-{}", config.experiment().name(), &config_hash(config)[..12]);
    let mut dir = config.output_dir.join(&base);
    let mut n = 1;
    while dir.exists() {
        n += 1;
        dir = config.output_dir.join(format!("{base}-{n}"));
    }
    fs::create_dir(&dir)?;
    write_json(&dir.join("config.json"), config)?;
    Ok(dir)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), LabError> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Serialize)]
pub struct Sidecar<'a, T: Serialize> {
    pub schema_version: u32,
    pub code_version: String,
    pub config_hash: String,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn write_sidecar<T: Serialize>(path: &Path, config: &ExperimentConfig, body: &T) -> Result<(), LabError> {
    let sidecar =
        Sidecar { schema_version: SCHEMA_VERSION, code_version: code_version(), config_hash: config_hash(config), body };
    write_json(path, &sidecar)
}

pub fn write_metrics(path: &Path, record: &RunRecord) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["step".to_string(), "loss".to_string(), "norm_loss".to_string()];
    header.extend(record.classes.iter().map(|c| format!("A_{c}")));
    w.write_record(&header)?;
    for e in &record.evals {
        let mut row = vec![e.step.to_string(), e.loss.to_string(), e.norm_loss.to_string()];
        row.extend(e.spectrum.iter().map(|a| a.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes serializable rows with a header taken from the field names.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
