//! CSV formats for raw runs, the run manifest, and featurized datasets.
//!
//! Raw run: `t,ax,ay,az,s1,s2,theta`.
//! Manifest: `run_id,file,rpm,label,first_worn_incident`, with `file`
//! resolved relative to the manifest's directory.
//! Featurized dataset: one column per feature followed by `label`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{LabeledDataset, Sample, SensorRun};
use crate::error::{Error, Result};

pub const RUN_HEADER: [&str; 7] = ["t", "ax", "ay", "az", "s1", "s2", "theta"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub run_id: String,
    pub file: String,
    pub rpm: f64,
    pub label: u8,
    pub first_worn_incident: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunRecord {
    t: f64,
    ax: f64,
    ay: f64,
    az: f64,
    s1: f64,
    s2: f64,
    theta: f64,
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let entries = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ManifestEntry>, _>>()
        .map_err(|e| Error::csv(path, e))?;
    if entries.is_empty() {
        return Err(Error::Empty("manifest lists no runs"));
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    ensure_parent(path)?;
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for entry in entries {
        writer.serialize(entry).map_err(|e| Error::csv(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_run_samples(path: &Path) -> Result<Vec<Sample>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?;
    if headers.iter().ne(RUN_HEADER) {
        return Err(Error::InvalidParameter(format!(
            "{}: expected header `{}`",
            path.display(),
            RUN_HEADER.join(",")
        )));
    }
    reader
        .deserialize()
        .map(|r| {
            r.map(|r: RunRecord| Sample {
                t: r.t,
                ax: r.ax,
                ay: r.ay,
                az: r.az,
                s1: r.s1,
                s2: r.s2,
                theta: r.theta,
            })
            .map_err(|e| Error::csv(path, e))
        })
        .collect()
}

pub fn write_run_samples(path: &Path, samples: &[Sample]) -> Result<()> {
    ensure_parent(path)?;
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for s in samples {
        writer
            .serialize(RunRecord {
                t: s.t,
                ax: s.ax,
                ay: s.ay,
                az: s.az,
                s1: s.s1,
                s2: s.s2,
                theta: s.theta,
            })
            .map_err(|e| Error::csv(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Loads every run listed in a manifest. All failures are collected and
/// reported together, keyed by run id.
pub fn load_runs(manifest_path: &Path) -> Result<Vec<SensorRun>> {
    let entries = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let mut runs = Vec::with_capacity(entries.len());
    let mut failures = Vec::new();
    for entry in entries {
        let file: PathBuf = base.join(&entry.file);
        let loaded = read_run_samples(&file).and_then(|samples| {
            SensorRun::new(
                entry.run_id.clone(),
                entry.rpm,
                samples,
                entry.label,
                entry.first_worn_incident,
            )
        });
        match loaded {
            Ok(run) => runs.push(run),
            Err(e) => failures.push((entry.run_id, e.to_string())),
        }
    }
    if failures.is_empty() {
        Ok(runs)
    } else {
        Err(Error::Runs(failures))
    }
}

/// Writes a dataset with full round-trip float precision.
pub fn write_dataset(path: &Path, dataset: &LabeledDataset) -> Result<()> {
    ensure_parent(path)?;
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    writer
        .write_record(&header)
        .map_err(|e| Error::csv(path, e))?;
    for (row, label) in dataset.rows().iter().zip(dataset.labels()) {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        record.push(label.to_string());
        writer
            .write_record(&record)
            .map_err(|e| Error::csv(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.len() < 2 || &headers[headers.len() - 1] != "label" {
        return Err(Error::InvalidParameter(format!(
            "{}: last column must be `label`",
            path.display()
        )));
    }
    let m = headers.len() - 1;
    let mut dataset = LabeledDataset::new(headers.iter().take(m).map(String::from).collect())?;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let bad = |field: &str| {
            Error::InvalidParameter(format!(
                "{}: row {}: cannot parse `{field}`",
                path.display(),
                line + 1
            ))
        };
        let row = record
            .iter()
            .take(m)
            .map(|f| f.trim().parse::<f64>().map_err(|_| bad(f)))
            .collect::<Result<Vec<_>>>()?;
        let label_field = &record[m];
        let label = label_field
            .trim()
            .parse::<u8>()
            .map_err(|_| bad(label_field))?;
        dataset.push(row, label)?;
    }
    Ok(dataset)
}
