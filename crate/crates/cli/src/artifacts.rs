//! Atomic artifact files and the hash manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.txt";

/// Writes files into one directory and records their SHA-256.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<(String, String)>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let ctx = || format!("writing {}", path.display());
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(ctx(), e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(ctx(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(ctx(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(ctx(), e.error))?;
    Ok(())
}

/// Shortest text that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

impl Artifacts {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        Ok(Self { dir, entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        let hash = hex::encode(Sha256::digest(bytes));
        log::info!("wrote {name} ({} bytes)", bytes.len());
        self.entries.retain(|(n, _)| n != name);
        self.entries.push((name.to_string(), hash));
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_csv<R, I>(&mut self, name: &str, header: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = f64>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::io(format!("formatting {name}"), e.into());
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(row.into_iter().map(fmt_f64)).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(format!("formatting {name}"), e.into_error()))?;
        self.write_bytes(name, &bytes)
    }

    /// Write the manifest. `failure` marks a run that stopped early; the
    /// files listed are the ones completed before it.
    pub fn finish(&self, failure: Option<&str>) -> Result<PathBuf, CliError> {
        let mut text = String::new();
        match failure {
            None => text.push_str("# status: complete\n"),
            Some(msg) => text.push_str(&format!("# status: failed: {}\n", msg.replace('\n', " "))),
        }
        for (name, hash) in &self.entries {
            text.push_str(&format!("{hash}  {name}\n"));
        }
        let path = self.dir.join(MANIFEST);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
