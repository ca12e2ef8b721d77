//! Portal domain model: resources, their gathered state, and the map
//! configuration, together with the rules for changing them.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize};

use crate::xml::Document;

/// Type key of a resource that has only been added by hostname. The monitor
/// never polls it and no gatherer may be registered under it.
pub const UNCONFIGURED: &str = "unconfigured";

pub const STATE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("hostname must not be empty")]
    EmptyHostname,
    #[error("resource type must not be empty")]
    EmptyType,
    #[error("no resource with id {0}")]
    NotFound(ResourceId),
    #[error("resource id {0:?} must be 1-64 characters of [A-Za-z0-9_-]")]
    InvalidId(String),
    #[error("duplicate resource id {0}")]
    DuplicateId(ResourceId),
    #[error("location ({lat}, {lon}) out of range: latitude must be within [-90, 90] and longitude within [-180, 180]")]
    InvalidLocation { lat: f64, lon: f64 },
    #[error("port {0} out of range 1-65535")]
    InvalidPort(i64),
    #[error("endpoint {0:?} must be an http:// or https:// URL")]
    InvalidEndpoint(String),
    #[error("zoom {0} out of range 0-19")]
    InvalidZoom(u32),
    #[error("map dimensions must be positive, got {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },
    #[error("unsupported state version {found}, expected {STATE_VERSION}")]
    UnsupportedVersion { found: u32 },
    #[error("invalid resource info: {0}")]
    InvalidInfo(&'static str),
}

impl ModelError {
    pub fn is_not_found(&self) -> bool {
        matches!(self, ModelError::NotFound(_))
    }
}

/// Opaque resource identifier. Generated ids are 32 lowercase hex digits;
/// any id that is safe to use as a file name is accepted on load.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(String);

impl ResourceId {
    pub fn from_u128(value: u128) -> ResourceId {
        ResourceId(alloc::format!("{value:032x}"))
    }

    pub fn parse(s: &str) -> Result<ResourceId, ModelError> {
        let ok = !s.is_empty() && s.len() <= 64 && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
        if ok {
            Ok(ResourceId(s.to_string()))
        } else {
            Err(ModelError::InvalidId(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Location {
    pub lat: f64,
    pub lon: f64,
}

impl Location {
    pub fn new(lat: f64, lon: f64) -> Result<Location, ModelError> {
        let loc = Location { lat, lon };
        loc.validate()?;
        Ok(loc)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        // NaN fails both range checks.
        if (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon) {
            Ok(())
        } else {
            Err(ModelError::InvalidLocation {
                lat: self.lat,
                lon: self.lon,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resource {
    pub id: ResourceId,
    pub hostname: String,
    #[serde(default)]
    pub port: Option<u16>,
    #[serde(rename = "type")]
    pub resource_type: String,
    pub label: String,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub location: Location,
    pub enabled: bool,
}

impl Resource {
    pub fn is_unconfigured(&self) -> bool {
        self.resource_type == UNCONFIGURED
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        ResourceId::parse(self.id.as_str())?;
        if self.hostname.trim().is_empty() {
            return Err(ModelError::EmptyHostname);
        }
        if self.resource_type.trim().is_empty() {
            return Err(ModelError::EmptyType);
        }
        if self.port == Some(0) {
            return Err(ModelError::InvalidPort(0));
        }
        if let Some(endpoint) = &self.endpoint {
            validate_endpoint(endpoint)?;
        }
        self.location.validate()
    }
}

fn validate_endpoint(endpoint: &str) -> Result<(), ModelError> {
    let lower = endpoint.to_ascii_lowercase();
    let rest = lower.strip_prefix("http://").or_else(|| lower.strip_prefix("https://"));
    match rest {
        Some(host) if !host.is_empty() => Ok(()),
        _ => Err(ModelError::InvalidEndpoint(endpoint.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ResourceStatus {
    Up,
    Down,
    Unknown,
}

impl ResourceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ResourceStatus::Up => "UP",
            ResourceStatus::Down => "DOWN",
            ResourceStatus::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for ResourceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The latest gathered state of one resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceInfo {
    pub resource_id: ResourceId,
    pub status: ResourceStatus,
    pub payload_xml: String,
    pub gathered_at: DateTime<Utc>,
    pub latency_ms: u64,
    pub error: Option<String>,
}

impl ResourceInfo {
    pub fn up(resource_id: ResourceId, payload_xml: String, gathered_at: DateTime<Utc>, latency_ms: u64) -> ResourceInfo {
        ResourceInfo {
            resource_id,
            status: ResourceStatus::Up,
            payload_xml,
            gathered_at,
            latency_ms,
            error: None,
        }
    }

    pub fn down(resource_id: ResourceId, error: impl Into<String>, gathered_at: DateTime<Utc>, latency_ms: u64) -> ResourceInfo {
        ResourceInfo {
            resource_id,
            status: ResourceStatus::Down,
            payload_xml: String::new(),
            gathered_at,
            latency_ms,
            error: Some(non_empty(error.into())),
        }
    }

    pub fn unknown(resource_id: ResourceId, reason: impl Into<String>, gathered_at: DateTime<Utc>) -> ResourceInfo {
        ResourceInfo {
            resource_id,
            status: ResourceStatus::Unknown,
            payload_xml: String::new(),
            gathered_at,
            latency_ms: 0,
            error: Some(non_empty(reason.into())),
        }
    }

    /// UP requires a well-formed payload; DOWN requires an error message.
    pub fn validate(&self) -> Result<(), ModelError> {
        match self.status {
            ResourceStatus::Up if Document::parse(&self.payload_xml).is_err() => {
                Err(ModelError::InvalidInfo("UP info must carry a well-formed XML payload"))
            }
            ResourceStatus::Down if self.error.as_deref().is_none_or(str::is_empty) => {
                Err(ModelError::InvalidInfo("DOWN info must carry an error"))
            }
            _ => Ok(()),
        }
    }
}

fn non_empty(s: String) -> String {
    if s.trim().is_empty() {
        "unspecified error".to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub tile_url_template: String,
    #[serde(default)]
    pub api_key: Option<String>,
    pub center: Location,
    pub zoom: u32,
    pub width_px: u32,
    pub height_px: u32,
    pub allow_pan: bool,
    pub allow_zoom: bool,
}

impl Default for MapConfig {
    fn default() -> MapConfig {
        MapConfig {
            tile_url_template: "https://tile.openstreetmap.org/{z}/{x}/{y}.png".to_string(),
            api_key: None,
            center: Location { lat: 0.0, lon: 0.0 },
            zoom: 2,
            width_px: 960,
            height_px: 540,
            allow_pan: true,
            allow_zoom: true,
        }
    }
}

impl MapConfig {
    pub const MAX_ZOOM: u32 = 19;

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.zoom > Self::MAX_ZOOM {
            return Err(ModelError::InvalidZoom(self.zoom));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(ModelError::InvalidDimensions {
                width: self.width_px,
                height: self.height_px,
            });
        }
        self.center.validate()
    }
}

/// The persisted portal configuration: map settings and resources in
/// display order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortalState {
    pub version: u32,
    pub map: MapConfig,
    pub resources: Vec<Resource>,
}

impl Default for PortalState {
    fn default() -> PortalState {
        PortalState {
            version: STATE_VERSION,
            map: MapConfig::default(),
            resources: Vec::new(),
        }
    }
}

impl PortalState {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.version != STATE_VERSION {
            return Err(ModelError::UnsupportedVersion { found: self.version });
        }
        self.map.validate()?;
        for (i, r) in self.resources.iter().enumerate() {
            r.validate()?;
            if self.resources[..i].iter().any(|o| o.id == r.id) {
                return Err(ModelError::DuplicateId(r.id.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &ResourceId) -> Option<&Resource> {
        self.resources.iter().find(|r| &r.id == id)
    }

    pub fn contains(&self, id: &ResourceId) -> bool {
        self.get(id).is_some()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ResourceId> {
        self.resources.iter().map(|r| &r.id)
    }

    /// Appends a new unconfigured resource for `hostname` under `id`.
    pub fn add_resource(&mut self, hostname: &str, id: ResourceId) -> Result<&Resource, ModelError> {
        let hostname = hostname.trim();
        if hostname.is_empty() {
            return Err(ModelError::EmptyHostname);
        }
        ResourceId::parse(id.as_str())?;
        if self.contains(&id) {
            return Err(ModelError::DuplicateId(id));
        }
        self.resources.push(Resource {
            id,
            hostname: hostname.to_string(),
            port: None,
            resource_type: UNCONFIGURED.to_string(),
            label: hostname.to_string(),
            endpoint: None,
            location: Location::default(),
            enabled: true,
        });
        Ok(self.resources.last().expect("just pushed"))
    }

    /// Applies `patch` to one resource. Nothing changes unless the whole
    /// patched resource is valid.
    pub fn update_resource(&mut self, id: &ResourceId, patch: &ResourcePatch) -> Result<&Resource, ModelError> {
        let slot = self
            .resources
            .iter_mut()
            .find(|r| &r.id == id)
            .ok_or_else(|| ModelError::NotFound(id.clone()))?;
        let updated = patch.apply(slot)?;
        *slot = updated;
        Ok(slot)
    }

    pub fn remove_resource(&mut self, id: &ResourceId) -> Result<Resource, ModelError> {
        let pos = self
            .resources
            .iter()
            .position(|r| &r.id == id)
            .ok_or_else(|| ModelError::NotFound(id.clone()))?;
        Ok(self.resources.remove(pos))
    }
}

/// A partial update of a resource. Absent fields are left unchanged;
/// `port` and `endpoint` may be set to `null` to clear them. The id is
/// immutable, so it is not a patchable field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcePatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hostname: Option<String>,
    #[serde(default, deserialize_with = "present", skip_serializing_if = "Option::is_none")]
    pub port: Option<Option<i64>>,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub resource_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, deserialize_with = "present", skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<Option<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
}

/// Distinguishes an explicit `null` (Some(None)) from an absent field (None).
fn present<'de, D, T>(d: D) -> Result<Option<Option<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(d).map(Some)
}

impl ResourcePatch {
    pub fn is_empty(&self) -> bool {
        *self == ResourcePatch::default()
    }

    /// Returns the patched copy of `resource`, or the first violated rule.
    pub fn apply(&self, resource: &Resource) -> Result<Resource, ModelError> {
        let mut r = resource.clone();
        if let Some(h) = &self.hostname {
            let h = h.trim();
            if h.is_empty() {
                return Err(ModelError::EmptyHostname);
            }
            r.hostname = h.to_string();
        }
        if let Some(port) = self.port {
            r.port = match port {
                None => None,
                Some(p) => Some(u16::try_from(p).ok().filter(|&p| p != 0).ok_or(ModelError::InvalidPort(p))?),
            };
        }
        if let Some(t) = &self.resource_type {
            let t = t.trim();
            if t.is_empty() {
                return Err(ModelError::EmptyType);
            }
            r.resource_type = t.to_string();
        }
        if let Some(label) = &self.label {
            r.label = label.clone();
        }
        if let Some(endpoint) = &self.endpoint {
            if let Some(e) = endpoint {
                validate_endpoint(e)?;
            }
            r.endpoint = endpoint.clone();
        }
        if let Some(loc) = self.location {
            r.location = loc;
        }
        if let Some(lat) = self.lat {
            r.location.lat = lat;
        }
        if let Some(lon) = self.lon {
            r.location.lon = lon;
        }
        r.location.validate()?;
        if let Some(enabled) = self.enabled {
            r.enabled = enabled;
        }
        Ok(r)
    }
}
