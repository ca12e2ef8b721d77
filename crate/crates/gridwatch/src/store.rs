//! On-disk store: one configuration document plus one info document per
//! resource.
//!
//! ```text
//! <dir>/portal.json        written by the server and the CLI
//! <dir>/state/<id>.json    written by the monitor
//! ```
//!
//! Every write goes to a temporary file in the target directory which is
//! synced and then renamed over the target, so readers in other processes
//! see either the previous or the new document.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use gridwatch_core::model::STATE_VERSION;
use gridwatch_core::{ModelError, PortalState, ResourceId, ResourceInfo, ResourceStatus};
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

pub const PORTAL_FILE: &str = "portal.json";
pub const STATE_DIR: &str = "state";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: not valid JSON at line {line}, column {column}: {message}", path.display())]
    Corrupt {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: unsupported state version {found} (expected {STATE_VERSION})", path.display())]
    Version { path: PathBuf, found: u32 },
    #[error("{}: {source}", path.display())]
    Invalid { path: PathBuf, source: ModelError },
    #[error("no information recorded for resource {0}")]
    NotFound(ResourceId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl StoreError {
    fn io(path: &Path, source: io::Error) -> StoreError {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn corrupt(path: &Path, e: serde_json::Error) -> StoreError {
        StoreError::Corrupt {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }

    pub fn is_not_found(&self) -> bool {
        match self {
            StoreError::NotFound(_) => true,
            StoreError::Model(e) => e.is_not_found(),
            _ => false,
        }
    }
}

/// A serialized document written to a temporary file next to its target and
/// not yet visible under the target name.
#[derive(Debug)]
pub struct StagedWrite {
    temp: NamedTempFile,
    target: PathBuf,
}

impl StagedWrite {
    pub fn new(target: &Path, bytes: &[u8]) -> Result<StagedWrite, StoreError> {
        let dir = target
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let mut temp = tempfile::Builder::new()
            .prefix(".tmp-")
            .suffix(".json")
            .tempfile_in(dir)
            .map_err(|e| StoreError::io(dir, e))?;
        temp.write_all(bytes).map_err(|e| StoreError::io(temp.path(), e))?;
        temp.as_file().sync_all().map_err(|e| StoreError::io(temp.path(), e))?;
        Ok(StagedWrite {
            temp,
            target: target.to_path_buf(),
        })
    }

    pub fn temp_path(&self) -> &Path {
        self.temp.path()
    }

    /// Atomically replaces the target with the staged document.
    pub fn commit(self) -> Result<(), StoreError> {
        let target = self.target;
        self.temp.persist(&target).map_err(|e| StoreError::io(&target, e.error))?;
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("store documents always serialize");
    bytes.push(b'\n');
    bytes
}

pub fn stage_state(path: &Path, state: &PortalState) -> Result<StagedWrite, StoreError> {
    state.validate()?;
    StagedWrite::new(path, &to_json(state))
}

pub fn save_state(path: &Path, state: &PortalState) -> Result<(), StoreError> {
    stage_state(path, state)?.commit()
}

pub fn load_state(path: &Path) -> Result<PortalState, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    parse_state(path, &text)
}

/// Parses a configuration document, checking the version before the rest of
/// the structure so that future formats report a version error.
pub fn parse_state(path: &Path, text: &str) -> Result<PortalState, StoreError> {
    #[derive(Deserialize)]
    struct VersionProbe {
        version: u32,
    }
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| StoreError::corrupt(path, e))?;
    if probe.version != STATE_VERSION {
        return Err(StoreError::Version {
            path: path.to_path_buf(),
            found: probe.version,
        });
    }
    let state: PortalState = serde_json::from_str(text).map_err(|e| StoreError::corrupt(path, e))?;
    state.validate().map_err(|source| StoreError::Invalid {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(state)
}

/// The per-resource info document. The resource id is the file name.
#[derive(Debug, Serialize, Deserialize)]
struct InfoFile {
    status: ResourceStatus,
    gathered_at: DateTime<Utc>,
    latency_ms: u64,
    error: Option<String>,
    payload_xml: String,
}

/// Handle to a store directory. Reads may happen from any task; writes
/// through one handle are serialized.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    write_lock: Mutex<()>,
}

impl Store {
    /// Opens `dir`, creating it and its `state/` subdirectory if needed.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = dir.into();
        let state_dir = root.join(STATE_DIR);
        fs::create_dir_all(&state_dir).map_err(|e| StoreError::io(&state_dir, e))?;
        Ok(Store {
            root,
            write_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn portal_path(&self) -> PathBuf {
        self.root.join(PORTAL_FILE)
    }

    pub fn info_path(&self, id: &ResourceId) -> PathBuf {
        self.root.join(STATE_DIR).join(format!("{id}.json"))
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, ()> {
        self.write_lock.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Loads the configuration; a store without `portal.json` holds the
    /// default state.
    pub fn load_state(&self) -> Result<PortalState, StoreError> {
        let path = self.portal_path();
        match fs::read_to_string(&path) {
            Ok(text) => parse_state(&path, &text),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(PortalState::default()),
            Err(e) => Err(StoreError::io(&path, e)),
        }
    }

    pub fn save_state(&self, state: &PortalState) -> Result<(), StoreError> {
        let _guard = self.lock();
        save_state(&self.portal_path(), state)
    }

    /// Loads, edits and saves the configuration under the write lock. Nothing
    /// is written if `edit` fails.
    pub fn modify_state<T>(&self, edit: impl FnOnce(&mut PortalState) -> Result<T, ModelError>) -> Result<T, StoreError> {
        let _guard = self.lock();
        let mut state = self.load_state()?;
        let out = edit(&mut state)?;
        save_state(&self.portal_path(), &state)?;
        Ok(out)
    }

    /// Removes a resource from the configuration and deletes its info file.
    pub fn delete_resource(&self, id: &ResourceId) -> Result<(), StoreError> {
        self.modify_state(|s| s.remove_resource(id).map(drop))?;
        self.delete_info(id)?;
        Ok(())
    }

    pub fn record_info(&self, info: &ResourceInfo) -> Result<(), StoreError> {
        info.validate()?;
        let file = InfoFile {
            status: info.status,
            gathered_at: info.gathered_at,
            latency_ms: info.latency_ms,
            error: info.error.clone(),
            payload_xml: info.payload_xml.clone(),
        };
        let _guard = self.lock();
        StagedWrite::new(&self.info_path(&info.resource_id), &to_json(&file))?.commit()
    }

    pub fn get_info(&self, id: &ResourceId) -> Result<ResourceInfo, StoreError> {
        let path = self.info_path(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.clone())),
            Err(e) => return Err(StoreError::io(&path, e)),
        };
        let file: InfoFile = serde_json::from_str(&text).map_err(|e| StoreError::corrupt(&path, e))?;
        Ok(ResourceInfo {
            resource_id: id.clone(),
            status: file.status,
            payload_xml: file.payload_xml,
            gathered_at: file.gathered_at,
            latency_ms: file.latency_ms,
            error: file.error,
        })
    }

    /// The recorded info, or `None` if the resource was never polled or its
    /// file cannot be read.
    pub fn info_or_none(&self, id: &ResourceId) -> Option<ResourceInfo> {
        match self.get_info(id) {
            Ok(info) => Some(info),
            Err(StoreError::NotFound(_)) => None,
            Err(e) => {
                tracing::warn!("ignoring unreadable info: {e}");
                None
            }
        }
    }

    /// Returns whether a file was removed.
    pub fn delete_info(&self, id: &ResourceId) -> Result<bool, StoreError> {
        let path = self.info_path(id);
        let _guard = self.lock();
        match fs::remove_file(&path) {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(false),
            Err(e) => Err(StoreError::io(&path, e)),
        }
    }

    /// Ids that have an info file, in no particular order.
    pub fn info_ids(&self) -> Result<Vec<ResourceId>, StoreError> {
        let dir = self.root.join(STATE_DIR);
        let entries = fs::read_dir(&dir).map_err(|e| StoreError::io(&dir, e))?;
        let mut ids = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| StoreError::io(&dir, e))?;
            let name = entry.file_name();
            let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".json")) else {
                continue;
            };
            if let Ok(id) = ResourceId::parse(stem) {
                ids.push(id);
            }
        }
        Ok(ids)
    }
}
