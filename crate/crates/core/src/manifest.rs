//! Run manifests: everything needed to reproduce an output file, written
//! next to it as `<out>.manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::pipeline::DroppedProblem;
use crate::seed::sha256_hex;

pub const TOOL: &str = "stepforge";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the input directory, or the bare file name.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Fields that legitimately differ between equivalent runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub argv: Vec<String>,
    pub workers: Option<usize>,
    pub timings_secs: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    /// Fully resolved settings after flags, config file and defaults.
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub dropped: Vec<DroppedProblem>,
    pub notes: Vec<String>,
    pub runtime: Runtime,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, config: serde_json::Value) -> Self {
        RunManifest {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            dropped: Vec::new(),
            notes: Vec::new(),
            runtime: Runtime::default(),
        }
    }

    /// Copy with the runtime section cleared, for run-to-run comparison.
    pub fn without_runtime(&self) -> Self {
        RunManifest {
            runtime: Runtime::default(),
            ..self.clone()
        }
    }

    pub fn write(&self, out: &Path) -> std::io::Result<PathBuf> {
        let path = manifest_path(out);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn digest_bytes(label: String, bytes: &[u8]) -> FileDigest {
    FileDigest {
        path: label,
        bytes: bytes.len() as u64,
        sha256: sha256_hex(bytes),
    }
}

/// Digest of one file, labelled by its file name.
pub fn digest_file(path: &Path) -> std::io::Result<FileDigest> {
    let bytes = fs::read(path)?;
    let label = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
    Ok(digest_bytes(label, &bytes))
}

/// Digests of every regular file under `dir`, sorted by relative path.
pub fn digest_tree(dir: &Path) -> std::io::Result<Vec<FileDigest>> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.is_file() {
                files.push(p);
            }
        }
    }
    let mut out = Vec::with_capacity(files.len());
    for p in files {
        let rel = p.strip_prefix(dir).expect("under dir");
        let label = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        out.push(digest_bytes(label, &fs::read(&p)?));
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}
