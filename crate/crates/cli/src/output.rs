//! Output files. Every file carries the resolved configuration and seeds:
//! JSON and SVG inline, CSV through a `<name>.csv.meta.json` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seeds: Vec<u64>,
    pub config: ExperimentConfig,
}

/// One CSV cell. Non-finite floats are written as empty cells; callers add
/// an explicit flag column where infinity is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Float(_) => String::new(),
            Cell::Int(v) => v.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(u64::from(v))
    }
}

pub struct Output {
    dir: PathBuf,
    meta: Metadata,
    written: Vec<PathBuf>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Output {
    pub fn new(dir: &Path, command: &str, cfg: &ExperimentConfig, seeds: Vec<u64>) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let meta = Metadata { tool: "nfcrb", version: env!("CARGO_PKG_VERSION"), command: command.into(), seeds, config: cfg.clone() };
        Ok(Self { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string(&self.meta).unwrap_or_default()
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let path = self.dir.join(format!("{name}.csv"));
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row.iter().map(Cell::render)).map_err(|e| io_err(&path, e))?;
        }
        let bytes = w.into_inner().map_err(|e| io_err(&path, e))?;
        self.put(&format!("{name}.csv"), &bytes)?;
        #[derive(Serialize)]
        struct Sidecar<'a> {
            file: String,
            columns: &'a [&'a str],
            #[serde(flatten)]
            meta: &'a Metadata,
        }
        let side = Sidecar { file: format!("{name}.csv"), columns: header, meta: &self.meta };
        let text = serde_json::to_string_pretty(&side).map_err(|e| io_err(&path, e))?;
        self.put(&format!("{name}.csv.meta.json"), text.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            metadata: &'a Metadata,
            data: &'a T,
        }
        let text = serde_json::to_string_pretty(&Doc { metadata: &self.meta, data })
            .map_err(|e| io_err(&self.dir.join(format!("{name}.json")), e))?;
        self.put(&format!("{name}.json"), text.as_bytes())
    }

    pub fn svg(&mut self, name: &str, body: String) -> Result<(), CliError> {
        self.put(&format!("{name}.svg"), body.as_bytes())
    }
}
