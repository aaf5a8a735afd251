//! Plain-text dataset manifests and the [`VideoSource`] abstraction.
//!
//! One record per line, tab separated:
//!
//! ```text
//! path<TAB>video_id<TAB>label<TAB>split_tag
//! ```
//!
//! `label` is `0`/`real`, `1`/`fake` or `255`/`-` (unlabeled). Relative paths
//! resolve against the manifest's directory. Blank lines and lines starting
//! with `#` are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::container::{read_container, ContainerError, ContainerHeader, TokenGrid};
use crate::Label;

/// Split tag of the only split allowed to feed fitting steps.
pub const TRAIN_SPLIT: &str = "train";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("i/o error reading manifest: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("container {path}: {source}")]
    Container {
        path: PathBuf,
        #[source]
        source: ContainerError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoMeta {
    pub video_id: String,
    pub label: Label,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub meta: VideoMeta,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ManifestError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 4 {
                return Err(ManifestError::Parse {
                    line: line_no,
                    message: format!("expected 4 tab-separated fields, found {}", fields.len()),
                });
            }
            let label = fields[2].parse::<Label>().map_err(|message| ManifestError::Parse {
                line: line_no,
                message,
            })?;
            if fields[1].is_empty() || fields[3].is_empty() {
                return Err(ManifestError::Parse {
                    line: line_no,
                    message: "empty video id or split tag".into(),
                });
            }
            let path = Path::new(fields[0]);
            entries.push(ManifestEntry {
                path: if path.is_absolute() { path.to_owned() } else { base_dir.join(path) },
                meta: VideoMeta {
                    video_id: fields[1].to_owned(),
                    label,
                    split: fields[3].to_owned(),
                },
            });
        }
        Ok(Manifest { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ManifestError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Serializes with paths relative to `base_dir` where possible.
    pub fn to_text(&self, base_dir: &Path) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let path = e.path.strip_prefix(base_dir).unwrap_or(&e.path);
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}",
                path.display(),
                e.meta.video_id,
                e.meta.label.code(),
                e.meta.split
            );
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ManifestError> {
        let path = path.as_ref();
        fs::write(path, self.to_text(path.parent().unwrap_or(Path::new("."))))?;
        Ok(())
    }
}

/// A collection of videos whose frames can be loaded one video at a time.
pub trait VideoSource {
    fn metas(&self) -> Vec<VideoMeta>;

    fn load(&self, index: usize) -> Result<(ContainerHeader, Vec<TokenGrid<f32>>), ManifestError>;

    fn len(&self) -> usize {
        self.metas().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl VideoSource for Manifest {
    fn metas(&self) -> Vec<VideoMeta> {
        self.entries.iter().map(|e| e.meta.clone()).collect()
    }

    fn load(&self, index: usize) -> Result<(ContainerHeader, Vec<TokenGrid<f32>>), ManifestError> {
        let path = &self.entries[index].path;
        read_container(path).map_err(|source| ManifestError::Container {
            path: path.clone(),
            source,
        })
    }
}

/// The subset of a source whose split tag matches.
pub struct SplitView<'a, S: ?Sized> {
    inner: &'a S,
    indices: Vec<usize>,
}

impl<'a, S: VideoSource + ?Sized> SplitView<'a, S> {
    pub fn new(inner: &'a S, split: &str) -> Self {
        let indices = inner
            .metas()
            .iter()
            .enumerate()
            .filter_map(|(i, m)| (m.split == split).then_some(i))
            .collect();
        SplitView { inner, indices }
    }
}

impl<S: VideoSource + ?Sized> VideoSource for SplitView<'_, S> {
    fn metas(&self) -> Vec<VideoMeta> {
        let all = self.inner.metas();
        self.indices.iter().map(|&i| all[i].clone()).collect()
    }

    fn load(&self, index: usize) -> Result<(ContainerHeader, Vec<TokenGrid<f32>>), ManifestError> {
        self.inner.load(self.indices[index])
    }

    fn len(&self) -> usize {
        self.indices.len()
    }
}
