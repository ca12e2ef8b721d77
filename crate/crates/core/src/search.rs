//! Case-insensitive keyword search over resources and their gathered payloads.

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{PortalState, Resource, ResourceId, ResourceInfo};
use crate::xml::Document;

/// Ids of resources whose hostname, label, type, or payload text contains
/// `keyword`, ignoring case, in state order. An empty keyword matches
/// everything.
///
/// Payload text is every text node of `payload_xml` in document order,
/// joined by single spaces; payloads that do not parse contribute nothing.
pub fn search<'a, F>(keyword: &str, state: &'a PortalState, info_for: F) -> Vec<ResourceId>
where
    F: Fn(&ResourceId) -> Option<&'a ResourceInfo>,
{
    let needle = keyword.to_lowercase();
    state
        .resources
        .iter()
        .filter(|r| needle.is_empty() || matches(&needle, r, info_for(&r.id)))
        .map(|r| r.id.clone())
        .collect()
}

fn matches(needle: &str, r: &Resource, info: Option<&ResourceInfo>) -> bool {
    let fields = [&r.hostname, &r.label, &r.resource_type];
    if fields.iter().any(|f| f.to_lowercase().contains(needle)) {
        return true;
    }
    info.is_some_and(|i| payload_text(&i.payload_xml).to_lowercase().contains(needle))
}

/// Joined text content of a payload, or the empty string if it is not XML.
pub fn payload_text(payload_xml: &str) -> String {
    if payload_xml.is_empty() {
        return String::new();
    }
    Document::parse(payload_xml)
        .map(|d| d.text_content_joined())
        .unwrap_or_default()
}
