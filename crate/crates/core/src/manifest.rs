//! Provenance record written next to every run's data files.

use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Seed handed to one trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeedRecord {
    pub label: String,
    pub index: u64,
    pub seed: u64,
}

/// A data file produced by a command, held in memory until written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl OutputFile {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        OutputFile {
            name: name.into(),
            bytes,
        }
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(&self.bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub master_seed: u64,
    pub threads: usize,
    /// Resolved configuration, in the `key = value` form accepted by
    /// `--config`; also written verbatim to `resolved.conf`.
    pub config: Vec<(String, String)>,
    pub seeds: Vec<SeedRecord>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn digests(files: &[OutputFile]) -> Vec<OutputDigest> {
        files
            .iter()
            .map(|f| OutputDigest {
                file: f.name.clone(),
                bytes: f.bytes.len(),
                sha256: f.sha256(),
            })
            .collect()
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        std::fs::write(dir.join("manifest.json"), text)
    }
}

/// Writes every file into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for f in files {
        std::fs::write(dir.join(&f.name), &f.bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_input() {
        let f = OutputFile::new("a.csv", b"abc".to_vec());
        assert_eq!(
            f.sha256(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let d = RunManifest::digests(&[f]);
        assert_eq!(d[0].bytes, 3);
    }
}
