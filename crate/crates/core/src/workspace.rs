//! On-disk layout shared by the command line tools and the service.
//!
//! ```text
//! <root>/config.json                 base URI
//! <root>/timelines/<enc uri_r>.json  ground-truth timelines
//! <root>/archives/<enc uri_r>.json   captured mementos, one archive per resource
//! <root>/archives/<enc uri_r>.nt     the matching TimeMap
//! <root>/content/<id>.nt             transcriptions served by the content server
//! <root>/collection/                 the harvested annotation collection
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::{Archive, ArchiveError, ResourceTimeline};
use crate::collection::{parse_transcription, Collection, CollectionError, HarvestReport};
use crate::encoding::{decode_component, encode_component};

pub const DEFAULT_BASE: &str = "http://localhost:8080";

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid content id {0:?}")]
    InvalidId(String),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Collection(#[from] CollectionError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Config {
    base: String,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
    base: String,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_opt(path: &Path) -> Result<Option<Vec<u8>>, WorkspaceError> {
    match fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>, WorkspaceError> {
    match read_opt(path)? {
        None => Ok(None),
        Some(bytes) => {
            serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|source| WorkspaceError::Json {
                    path: path.to_path_buf(),
                    source,
                })
        }
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), WorkspaceError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), WorkspaceError> {
    let bytes = serde_json::to_vec_pretty(value).map_err(|source| WorkspaceError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write(path, &bytes)
}

/// File stems in `dir` with the given extension, sorted.
fn stems(dir: &Path, ext: &str) -> Result<Vec<String>, WorkspaceError> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(dir)(e)),
    };
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push(stem.to_string());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Content ids become file names and URI path segments.
pub fn valid_content_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b"-_.".contains(&b))
}

impl Workspace {
    /// Opens `root`, reading its base URI if one was recorded.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, WorkspaceError> {
        let root = root.into();
        let base = read_json::<Config>(&root.join("config.json"))?
            .map_or_else(|| DEFAULT_BASE.to_string(), |c| c.base);
        Ok(Workspace { root, base })
    }

    /// Creates or re-targets a workspace at `root` with the given base URI.
    pub fn init(root: impl Into<PathBuf>, base: &str) -> Result<Self, WorkspaceError> {
        let root = root.into();
        let base = base.trim_end_matches('/').to_string();
        write_json(&root.join("config.json"), &Config { base: base.clone() })?;
        Ok(Workspace { root, base })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn memento_base(&self) -> String {
        format!("{}/memento", self.base)
    }

    pub fn resource_uri(&self, id: &str) -> String {
        format!("{}/resource/{}", self.base, id)
    }

    pub fn content_uri(&self, id: &str) -> String {
        format!("{}/content/{}", self.base, id)
    }

    /// The content id named by a content-server URI of this workspace.
    pub fn content_id(&self, uri: &str) -> Option<String> {
        let id = uri.strip_prefix(&self.base)?.strip_prefix("/content/")?;
        valid_content_id(id).then(|| id.to_string())
    }

    fn timeline_path(&self, uri_r: &str) -> PathBuf {
        self.root
            .join("timelines")
            .join(format!("{}.json", encode_component(uri_r)))
    }

    fn archive_path(&self, uri_r: &str, ext: &str) -> PathBuf {
        self.root
            .join("archives")
            .join(format!("{}.{ext}", encode_component(uri_r)))
    }

    fn content_path(&self, id: &str) -> Result<PathBuf, WorkspaceError> {
        if !valid_content_id(id) {
            return Err(WorkspaceError::InvalidId(id.to_string()));
        }
        Ok(self.root.join("content").join(format!("{id}.nt")))
    }

    pub fn save_timeline(&self, tl: &ResourceTimeline) -> Result<(), WorkspaceError> {
        write_json(&self.timeline_path(tl.uri_r()), tl)
    }

    pub fn load_timeline(&self, uri_r: &str) -> Result<Option<ResourceTimeline>, WorkspaceError> {
        read_json(&self.timeline_path(uri_r))
    }

    pub fn timelines(&self) -> Result<BTreeMap<String, ResourceTimeline>, WorkspaceError> {
        let mut out = BTreeMap::new();
        for stem in stems(&self.root.join("timelines"), "json")? {
            let Some(uri_r) = decode_component(&stem) else {
                continue;
            };
            if let Some(tl) = self.load_timeline(&uri_r)? {
                out.insert(uri_r, tl);
            }
        }
        Ok(out)
    }

    /// Stores the archive's record of every resource it holds, replacing
    /// earlier captures of those resources, together with their TimeMaps.
    pub fn save_archive(&self, archive: &Archive) -> Result<(), WorkspaceError> {
        for uri_r in archive.resources() {
            let mut single = Archive::new(archive.kind(), archive.base());
            single.extend_from(archive, uri_r);
            write_json(&self.archive_path(uri_r, "json"), &single)?;
            write(
                &self.archive_path(uri_r, "nt"),
                single.timemap(uri_r)?.serialize().as_bytes(),
            )?;
        }
        Ok(())
    }

    pub fn load_archive(&self, uri_r: &str) -> Result<Option<Archive>, WorkspaceError> {
        read_json(&self.archive_path(uri_r, "json"))
    }

    /// Every captured resource and the archive holding it.
    pub fn archives(&self) -> Result<BTreeMap<String, Archive>, WorkspaceError> {
        let mut out = BTreeMap::new();
        for stem in stems(&self.root.join("archives"), "json")? {
            let Some(uri_r) = decode_component(&stem) else {
                continue;
            };
            if let Some(a) = self.load_archive(&uri_r)? {
                out.insert(uri_r, a);
            }
        }
        Ok(out)
    }

    /// Stores a transcription after checking it parses. Returns whether
    /// the id was new.
    pub fn put_content(&self, id: &str, bytes: &[u8]) -> Result<bool, WorkspaceError> {
        let path = self.content_path(id)?;
        let text = std::str::from_utf8(bytes)
            .map_err(|e| CollectionError::MalformedTranscription(format!("not UTF-8: {e}")))?;
        parse_transcription(text)?;
        let created = !path.exists();
        write(&path, bytes)?;
        Ok(created)
    }

    pub fn get_content(&self, id: &str) -> Result<Option<Vec<u8>>, WorkspaceError> {
        read_opt(&self.content_path(id)?)
    }

    pub fn content_ids(&self) -> Result<Vec<String>, WorkspaceError> {
        Ok(stems(&self.root.join("content"), "nt")?
            .into_iter()
            .filter(|id| valid_content_id(id))
            .collect())
    }

    pub fn load_collection(&self) -> Result<Collection, WorkspaceError> {
        Ok(Collection::load(&self.root.join("collection"))?)
    }

    pub fn save_collection(&self, c: &Collection) -> Result<(), WorkspaceError> {
        Ok(c.save(&self.root.join("collection"))?)
    }

    /// Ingests every transcription on the content server into `c`.
    pub fn harvest(&self, c: &mut Collection) -> Result<HarvestReport, WorkspaceError> {
        let feed: Vec<String> = self
            .content_ids()?
            .iter()
            .map(|id| self.content_uri(id))
            .collect();
        Ok(c.harvest(&feed, |uri| {
            let id = self
                .content_id(uri)
                .ok_or_else(|| format!("not a content URI: {uri}"))?;
            match self.get_content(&id) {
                Ok(Some(bytes)) => String::from_utf8(bytes).map_err(|e| e.to_string()),
                Ok(None) => Err("not found".to_string()),
                Err(e) => Err(e.to_string()),
            }
        }))
    }
}
