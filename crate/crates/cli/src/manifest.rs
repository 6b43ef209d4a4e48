use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use baycv_core::io::format_key_values;
use sha2::{Digest, Sha256};

use crate::CliError;

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Key-value record of one invocation: settings, input digests, outputs.
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            entries: vec![
                ("tool".into(), "baycv".into()),
                ("version".into(), env!("CARGO_PKG_VERSION").into()),
                ("command".into(), command.into()),
                ("started_unix".into(), unix_now().to_string()),
            ],
        }
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn config(&mut self, key: &str, value: impl ToString) {
        self.set(format!("config.{key}"), value);
    }

    /// Records the SHA-256 of an input file under `input.<label>`.
    pub fn input(&mut self, label: &str, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.set(format!("input.{label}.path"), path.display());
        self.set(format!("input.{label}.sha256"), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    pub fn output(&mut self, label: &str, path: &Path) {
        self.set(format!("output.{label}"), path.display());
    }

    pub fn write(mut self, path: &Path) -> Result<(), CliError> {
        self.set("finished_unix", unix_now());
        std::fs::write(path, format_key_values(&self.entries))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// Manifest location for commands that write a single file.
pub fn beside(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.txt");
    s.into()
}

/// How an output file refers to its manifest: by file name, since the two
/// always sit in the same directory.
pub fn reference(manifest_path: &Path) -> String {
    manifest_path
        .file_name()
        .map_or_else(|| manifest_path.display().to_string(), |n| n.to_string_lossy().into_owned())
}
