use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Collects artifacts written to one output directory and the `key: value` lines of its manifest.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, String)>,
    lines: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            lines: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push((name.to_string(), hex(&Sha256::digest(bytes))));
        Ok(())
    }

    pub fn record(&mut self, key: impl Into<String>, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    /// Writes `manifest.txt`: header, config echo, results, then one hash line per artifact.
    pub fn finish(self, header: &[(String, String)], wall_time: f64) -> Result<PathBuf, CliError> {
        let mut text = String::new();
        for (k, v) in header.iter().chain(&self.lines) {
            text.push_str(&format!("{k}: {v}\n"));
        }
        text.push_str(&format!("wall_time_s: {wall_time:.6}\n"));
        for (name, hash) in &self.files {
            text.push_str(&format!("artifact.{name}: sha256:{hash}\n"));
        }
        let path = self.dir.join("manifest.txt");
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
