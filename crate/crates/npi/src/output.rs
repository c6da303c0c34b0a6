//! Output directory with a single writer that remembers every file it emits.

use std::fs;
use std::path::{Path, PathBuf};

use npi_core::types::{RingPolymerState, SystemSpec};

use crate::checkpoint::save_checkpoint;
use crate::error::{NpiError, Result};

pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

/// Shortest decimal text that reads back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| NpiError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative names of the files written so far, in order.
    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn claim(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.claim(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        w.write_record(header).map_err(|e| csv_error(&path, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| NpiError::io(&path, e))
    }

    pub fn write_checkpoint(&mut self, name: &str, state: &RingPolymerState, spec: &SystemSpec) -> Result<()> {
        let path = self.claim(name);
        save_checkpoint(state, spec, &path)
    }

    /// Writes a text file that is not tracked as an emitted artifact (the manifest itself).
    pub fn write_untracked(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| NpiError::io(&path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> NpiError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => NpiError::io(path, io),
        other => NpiError::Serialization(format!("{}: {other:?}", path.display())),
    }
}
