//! Reproducibility manifest: the effective config hash, the hash of every
//! input the command read, and the hash of every artifact it wrote. No
//! timestamps, so identical runs produce identical manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use textmine::Error;

pub const MANIFEST_FILE: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of one input: file content, or for a directory the sorted sequence
/// of (file name, content hash) pairs of its regular files.
fn hash_path(path: &Path) -> Result<String, Error> {
    let meta = std::fs::metadata(path).map_err(|e| Error::UnreadablePath {
        path: path.into(),
        source: e,
    })?;
    if meta.is_dir() {
        let mut names: Vec<(String, std::path::PathBuf)> = std::fs::read_dir(path)
            .map_err(|e| Error::UnreadablePath {
                path: path.into(),
                source: e,
            })?
            .filter_map(|entry| entry.ok())
            .filter(|entry| entry.path().is_file())
            .map(|entry| {
                (
                    entry.file_name().to_string_lossy().into_owned(),
                    entry.path(),
                )
            })
            .collect();
        names.sort();
        let mut h = Sha256::new();
        for (name, p) in names {
            let bytes = std::fs::read(&p).map_err(|e| Error::UnreadablePath {
                path: p.clone(),
                source: e,
            })?;
            h.update(name.as_bytes());
            h.update([0]);
            h.update(sha256_hex(&bytes).as_bytes());
            h.update([0]);
        }
        Ok(hex::encode(h.finalize()))
    } else {
        let bytes = std::fs::read(path).map_err(|e| Error::UnreadablePath {
            path: path.into(),
            source: e,
        })?;
        Ok(sha256_hex(&bytes))
    }
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    tool: Tool,
    config_sha256: &'a str,
    inputs: &'a BTreeMap<String, String>,
    artifacts: BTreeMap<String, String>,
}

pub struct Manifest {
    config_sha256: String,
    inputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(effective_config_json: &str) -> Manifest {
        Manifest {
            config_sha256: sha256_hex(effective_config_json.as_bytes()),
            inputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), Error> {
        self.inputs
            .insert(path.display().to_string(), hash_path(path)?);
        Ok(())
    }

    /// Hashes the named artifacts inside out_dir and writes manifest.json.
    pub fn write(&self, out_dir: &Path, artifact_names: &[&str]) -> Result<(), Error> {
        let mut artifacts = BTreeMap::new();
        for name in artifact_names {
            artifacts.insert((*name).to_string(), hash_path(&out_dir.join(name))?);
        }
        let file = ManifestFile {
            tool: Tool {
                name: "textmine",
                version: env!("CARGO_PKG_VERSION"),
            },
            config_sha256: &self.config_sha256,
            inputs: &self.inputs,
            artifacts,
        };
        let text = serde_json::to_string_pretty(&file).expect("manifest serializes");
        let path = out_dir.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| Error::UnreadablePath { path, source: e })
    }
}
