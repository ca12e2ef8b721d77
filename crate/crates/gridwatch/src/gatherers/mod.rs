//! Information gatherers and the registry that maps resource type keys to
//! them.
//!
//! A gatherer turns a [`Resource`] into a [`ResourceInfo`]. It never fails:
//! timeouts, refused connections and bad payloads all come back as a DOWN
//! info carrying an error message.
//!
//! The registry is usually built from a `gatherers.json` file:
//!
//! ```json
//! [
//!   {"type": "tcp-probe"},
//!   {"type": "cluster", "gatherer": "http-xml", "styles": "styles/cluster"}
//! ]
//! ```
//!
//! `gatherer` names the implementation and defaults to `type`. `styles` is a
//! directory holding `popup.xsl` and `list.xsl`, relative to the file.

mod http;
mod tcp;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use gridwatch_core::{Resource, ResourceInfo, Stylesheet, StylesheetError, StylesheetPair, UNCONFIGURED};
use serde::Deserialize;

pub use http::HttpXmlGatherer;
pub use tcp::TcpProbeGatherer;

pub const GATHERERS_FILE: &str = "gatherers.json";
pub const STYLES_DIR: &str = "styles";
pub const POPUP_FILE: &str = "popup.xsl";
pub const LIST_FILE: &str = "list.xsl";

#[async_trait]
pub trait Gatherer: Send + Sync {
    /// Queries one resource. Implementations should return within `timeout`;
    /// the monitor abandons calls that take longer than `timeout` plus a
    /// short grace period.
    async fn gather(&self, resource: &Resource, timeout: Duration) -> ResourceInfo;
}

/// The names accepted in the `gatherer` field of `gatherers.json`.
pub const BUILTIN_GATHERERS: &[&str] = &["tcp-probe", "http-xml"];

pub fn builtin_gatherer(name: &str) -> Option<Arc<dyn Gatherer>> {
    match name {
        "tcp-probe" => Some(Arc::new(TcpProbeGatherer)),
        "http-xml" => Some(Arc::new(HttpXmlGatherer::new())),
        _ => None,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StylesError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Stylesheet { path: PathBuf, source: StylesheetError },
}

/// Loads `popup.xsl` and `list.xsl` from `dir`. Either both load or the pair
/// is reported missing.
pub fn load_styles(dir: &Path) -> Result<StylesheetPair, StylesError> {
    let load = |name: &str| {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(|source| StylesError::Io {
            path: path.clone(),
            source,
        })?;
        Stylesheet::parse(&text).map_err(|source| StylesError::Stylesheet { path, source })
    };
    Ok(StylesheetPair {
        popup: load(POPUP_FILE)?,
        list: load(LIST_FILE)?,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("the type key {UNCONFIGURED:?} is reserved")]
    Reserved,
    #[error("type key must not be empty")]
    EmptyKey,
    #[error("type {0:?} is already registered")]
    Duplicate(String),
    #[error("type {type_key:?}: unknown gatherer {gatherer:?} (available: {})", BUILTIN_GATHERERS.join(", "))]
    UnknownGatherer { type_key: String, gatherer: String },
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no gatherer registered for type {0:?}")]
pub struct NotRegistered(pub String);

/// One entry of `gatherers.json`.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GathererConfig {
    #[serde(rename = "type")]
    pub type_key: String,
    #[serde(default)]
    pub gatherer: Option<String>,
    #[serde(default)]
    pub styles: Option<PathBuf>,
}

struct Entry {
    gatherer: Arc<dyn Gatherer>,
    styles: Option<StylesheetPair>,
}

#[derive(Default)]
pub struct GathererRegistry {
    entries: BTreeMap<String, Entry>,
}

impl std::fmt::Debug for GathererRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map()
            .entries(self.entries.iter().map(|(k, e)| (k, e.styles.is_some())))
            .finish()
    }
}

impl GathererRegistry {
    pub fn new() -> GathererRegistry {
        GathererRegistry::default()
    }

    /// `tcp-probe` and `http-xml` under their own names, without stylesheets.
    pub fn builtin() -> GathererRegistry {
        let mut r = GathererRegistry::new();
        for name in BUILTIN_GATHERERS {
            r.register(name, builtin_gatherer(name).expect("builtin"))
                .expect("distinct builtin keys");
        }
        r
    }

    pub fn register(&mut self, key: &str, gatherer: Arc<dyn Gatherer>) -> Result<&mut Self, RegistryError> {
        self.register_with_styles(key, gatherer, None)
    }

    pub fn register_with_styles(
        &mut self,
        key: &str,
        gatherer: Arc<dyn Gatherer>,
        styles: Option<StylesheetPair>,
    ) -> Result<&mut Self, RegistryError> {
        if key.is_empty() {
            return Err(RegistryError::EmptyKey);
        }
        if key == UNCONFIGURED {
            return Err(RegistryError::Reserved);
        }
        if self.entries.contains_key(key) {
            return Err(RegistryError::Duplicate(key.to_string()));
        }
        self.entries.insert(key.to_string(), Entry { gatherer, styles });
        Ok(self)
    }

    pub fn lookup(&self, key: &str) -> Result<Arc<dyn Gatherer>, NotRegistered> {
        self.entries
            .get(key)
            .map(|e| Arc::clone(&e.gatherer))
            .ok_or_else(|| NotRegistered(key.to_string()))
    }

    pub fn styles(&self, key: &str) -> Option<&StylesheetPair> {
        self.entries.get(key).and_then(|e| e.styles.as_ref())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Builds a registry from parsed config entries. Relative style
    /// directories are resolved against `base`. A style directory that fails
    /// to load is logged and the type renders with the fallback.
    pub fn from_config(entries: &[GathererConfig], base: &Path) -> Result<GathererRegistry, RegistryError> {
        let mut r = GathererRegistry::new();
        for entry in entries {
            let name = entry.gatherer.as_deref().unwrap_or(&entry.type_key);
            let gatherer = builtin_gatherer(name).ok_or_else(|| RegistryError::UnknownGatherer {
                type_key: entry.type_key.clone(),
                gatherer: name.to_string(),
            })?;
            let styles = entry.styles.as_ref().and_then(|dir| {
                load_styles(&base.join(dir))
                    .inspect_err(|e| tracing::warn!("type {:?}: stylesheets unavailable: {e}", entry.type_key))
                    .ok()
            });
            r.register_with_styles(&entry.type_key, gatherer, styles)?;
        }
        Ok(r)
    }

    pub fn from_config_file(path: &Path) -> Result<GathererRegistry, RegistryError> {
        let config_error = |message: String| RegistryError::Config {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| config_error(e.to_string()))?;
        let entries: Vec<GathererConfig> = serde_json::from_str(&text).map_err(|e| config_error(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        GathererRegistry::from_config(&entries, base)
    }

    /// The registry for a store directory: `config` if given, otherwise
    /// `<state_dir>/gatherers.json` if it exists, otherwise the built-in
    /// gatherers with stylesheets from `<state_dir>/styles/<type>/`.
    pub fn for_state_dir(state_dir: &Path, config: Option<&Path>) -> Result<GathererRegistry, RegistryError> {
        if let Some(path) = config {
            return GathererRegistry::from_config_file(path);
        }
        let default = state_dir.join(GATHERERS_FILE);
        if default.exists() {
            return GathererRegistry::from_config_file(&default);
        }
        let entries: Vec<GathererConfig> = BUILTIN_GATHERERS
            .iter()
            .map(|name| GathererConfig {
                type_key: name.to_string(),
                gatherer: None,
                styles: Some(Path::new(STYLES_DIR).join(name)).filter(|d| state_dir.join(d).is_dir()),
            })
            .collect();
        GathererRegistry::from_config(&entries, state_dir)
    }
}

pub(crate) fn elapsed_ms(start: std::time::Instant) -> u64 {
    u64::try_from(start.elapsed().as_millis()).unwrap_or(u64::MAX)
}
