use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentId, SCHEMA_VERSION};
use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

/// A CSV table held as text cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(name: impl Into<String>, columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
    }
}

/// A structured-text (JSON) side file.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub name: String,
    pub content: String,
}

/// Everything an experiment run produces, before it touches the disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Outputs {
    pub experiment: ExperimentId,
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub documents: Vec<Document>,
}

impl Outputs {
    pub fn empty(experiment: ExperimentId, config: ExperimentConfig) -> Self {
        Self {
            experiment,
            config,
            tables: Vec::new(),
            documents: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub format: FileFormat,
    /// Column order for CSV files; empty for JSON.
    pub columns: Vec<String>,
    pub rows: usize,
}

/// Index of an output directory. It embeds the full effective config, so
/// every default used by the run is on record. The output location itself is
/// left out so that a run's files do not depend on where they were written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: ExperimentId,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Write every non-empty table as `<name>.csv`, every document as
/// `<name>.json`, then `manifest.json` listing them in that order.
pub fn emit_results(outputs: &Outputs, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in outputs.tables.iter().filter(|t| !t.rows.is_empty()) {
        let name = format!("{}.csv", t.name);
        std::fs::write(dir.join(&name), t.to_csv()?)?;
        files.push(FileEntry {
            name,
            format: FileFormat::Csv,
            columns: t.columns.clone(),
            rows: t.rows.len(),
        });
    }
    for d in &outputs.documents {
        let name = format!("{}.json", d.name);
        std::fs::write(dir.join(&name), &d.content)?;
        files.push(FileEntry {
            name,
            format: FileFormat::Json,
            columns: Vec::new(),
            rows: 0,
        });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        experiment: outputs.experiment,
        seed: outputs.config.seed,
        config: ExperimentConfig {
            output_dir: None,
            ..outputs.config.clone()
        },
        files,
    };
    std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}
