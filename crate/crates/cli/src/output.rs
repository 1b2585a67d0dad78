//! Artifact writing: every file carries the config hash, and files appear
//! atomically (write to a temporary sibling, then rename).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum ArtifactKind {
    /// CSV or plain text; a `# config_hash=… seed=…` line is prepended.
    Text,
    /// JSON object; `config_hash` and `seed` fields are inserted.
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub kind: ArtifactKind,
    pub body: Vec<u8>,
}

impl Artifact {
    pub fn text(name: &str, body: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            kind: ArtifactKind::Text,
            body,
        }
    }

    pub fn json(name: &str, value: &Value) -> Self {
        Self {
            name: name.into(),
            kind: ArtifactKind::Json,
            body: serde_json::to_vec_pretty(value).expect("json value serializes"),
        }
    }

    /// File contents with the provenance header applied.
    pub fn render(&self, config_hash: &str, seed: u64) -> Vec<u8> {
        match self.kind {
            ArtifactKind::Text => {
                let mut out = format!("# config_hash={config_hash} seed={seed}\n").into_bytes();
                out.extend_from_slice(&self.body);
                out
            }
            ArtifactKind::Json => {
                let mut value: Value = serde_json::from_slice(&self.body).expect("json artifact");
                if let Value::Object(map) = &mut value {
                    map.insert("config_hash".into(), Value::from(config_hash));
                    map.insert("seed".into(), Value::from(seed));
                }
                let mut out = serde_json::to_vec_pretty(&value).expect("json value serializes");
                out.push(b'\n');
                out
            }
        }
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_artifacts(
    dir: &Path,
    artifacts: &[Artifact],
    config_hash: &str,
    seed: u64,
) -> io::Result<Vec<PathBuf>> {
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            write_atomic(&path, &a.render(config_hash, seed))?;
            Ok(path)
        })
        .collect()
}
