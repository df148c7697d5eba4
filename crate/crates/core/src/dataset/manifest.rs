//! JSON-lines manifests: one [`SampleRecord`] per line, paths relative to the
//! directory holding the manifest file.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iqa::PartitionLabel;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    #[default]
    Original,
    Antithetical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub path: PathBuf,
    pub identity: u32,
    pub camera: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharpness: Option<f64>,
    #[serde(default)]
    pub origin: Origin,
    /// Path of the original image an antithetical record was derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterpart: Option<PathBuf>,
}

impl SampleRecord {
    pub fn original(path: impl Into<PathBuf>, identity: u32, camera: u32) -> Self {
        Self {
            path: path.into(),
            identity,
            camera,
            partition: None,
            sharpness: None,
            origin: Origin::Original,
            counterpart: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub records: Vec<SampleRecord>,
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Location of a record path on disk.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.root.join(path)
    }

    /// `path` as seen from another root directory: relative when it lies
    /// beneath `new_root`, absolute otherwise.
    pub fn rebase(&self, path: &Path, new_root: &Path) -> PathBuf {
        if self.root == new_root {
            return path.to_path_buf();
        }
        let abs = absolute(&self.root.join(path));
        let root = absolute(new_root);
        abs.strip_prefix(&root).map(Path::to_path_buf).unwrap_or(abs)
    }

    pub fn identities(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.records.iter().map(|r| r.identity).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Records carrying a given partition label.
    pub fn with_partition(&self, label: PartitionLabel) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(move |r| r.partition == Some(label))
    }

    /// Splits into `(query, gallery)`: the first `per_identity` records of
    /// each identity, in manifest order, become queries.
    pub fn split_queries(&self, per_identity: usize) -> (Manifest, Manifest) {
        let mut seen: HashMap<u32, usize> = HashMap::new();
        let mut query = Manifest::new(self.root.clone());
        let mut gallery = Manifest::new(self.root.clone());
        for rec in &self.records {
            let n = seen.entry(rec.identity).or_default();
            if *n < per_identity {
                query.records.push(rec.clone());
            } else {
                gallery.records.push(rec.clone());
            }
            *n += 1;
        }
        (query, gallery)
    }

    pub fn check_unique_paths(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for rec in &self.records {
            if !seen.insert(&rec.path) {
                return Err(Error::InvalidInput(format!(
                    "duplicate path {} in manifest",
                    rec.path.display()
                )));
            }
        }
        Ok(())
    }
}

/// Lexically absolute path with `.` and `..` folded.
fn absolute(path: &Path) -> PathBuf {
    let joined = if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir().unwrap_or_else(|_| PathBuf::from("/")).join(path)
    };
    let mut out = PathBuf::new();
    for comp in joined.components() {
        match comp {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

fn root_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest = Manifest::new(root_of(path));
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Manifest { path: path.to_path_buf(), line: i + 1, reason };
        let rec: SampleRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if !seen.insert(rec.path.clone()) {
            return Err(bad(format!("duplicate path {}", rec.path.display())));
        }
        manifest.records.push(rec);
    }
    Ok(manifest)
}

/// Writes one JSON object per line. Record paths are rewritten relative to the
/// destination directory.
pub fn save_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    manifest.check_unique_paths()?;
    let root = root_of(path);
    let mut buf = Vec::new();
    for rec in &manifest.records {
        let mut rec = rec.clone();
        rec.path = manifest.rebase(&rec.path, &root);
        rec.counterpart = rec.counterpart.map(|c| manifest.rebase(&c, &root));
        serde_json::to_writer(&mut buf, &rec)
            .map_err(|e| Error::InvalidInput(format!("cannot serialize record: {e}")))?;
        buf.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}
