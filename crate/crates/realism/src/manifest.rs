//! Run manifests: what went in, what came out, and how to redo it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::Job;
use crate::error::{CliError, CliResult};
use crate::io::{read_json, write_json};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: &Path, recorded_as: PathBuf) -> CliResult<Self> {
        let data = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(FileDigest {
            path: recorded_as,
            sha256: sha256_hex(&data),
            bytes: data.len() as u64,
        })
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Versions {
    pub tool: String,
    pub core: String,
    pub archive: u32,
}

impl Versions {
    pub fn current() -> Self {
        Versions {
            tool: env!("CARGO_PKG_VERSION").into(),
            core: realism_core::VERSION.into(),
            archive: crate::archive::VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifest_version: u32,
    pub versions: Versions,
    /// Fully resolved job; re-running it reproduces the outputs.
    pub job: Job,
    /// Master seeds by purpose.
    pub seeds: BTreeMap<String, u64>,
    /// Input files with their paths as used by the job.
    pub inputs: Vec<FileDigest>,
    /// Output files relative to the output directory, sorted by path.
    pub outputs: Vec<FileDigest>,
    /// Config file the job was resolved from, if any.
    pub config_file: Option<FileDigest>,
    pub started_at: String,
    pub finished_at: String,
}

impl Manifest {
    pub fn write(&self, out_dir: &Path) -> CliResult<()> {
        write_json(&out_dir.join(MANIFEST_FILE), self)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let path = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let m: Manifest = read_json(&path)?;
        if m.manifest_version != MANIFEST_VERSION {
            return Err(CliError::validation(format!(
                "{}: manifest version {} is not supported",
                path.display(),
                m.manifest_version
            )));
        }
        Ok(m)
    }

    /// Inputs whose current content differs from the recorded hash.
    pub fn changed_inputs(&self) -> CliResult<Vec<PathBuf>> {
        let mut changed = Vec::new();
        for d in &self.inputs {
            if FileDigest::of(&d.path, d.path.clone())? != *d {
                changed.push(d.path.clone());
            }
        }
        Ok(changed)
    }
}

/// Digests of the given files under `dir`, sorted by relative path.
pub fn digest_outputs(dir: &Path, files: &[PathBuf]) -> CliResult<Vec<FileDigest>> {
    let mut out = files
        .iter()
        .map(|rel| FileDigest::of(&dir.join(rel), rel.clone()))
        .collect::<CliResult<Vec<_>>>()?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    out.dedup_by(|a, b| a.path == b.path);
    Ok(out)
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
