//! HTML fragments for the map popup and the resource list.
//!
//! Each resource type may register a [`StylesheetPair`]. Payloads of UP
//! resources are transformed with it; every other case, and any transform
//! failure, falls back to a generic rendering so a resource is never hidden.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::Serialize;

use crate::escape;
use crate::model::{Resource, ResourceId, ResourceInfo, ResourceStatus};
use crate::xml::{Document, NodeKind};
use crate::xslt::Stylesheet;

/// Infos older than this many monitor intervals are stale.
pub const STALE_INTERVALS: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct StylesheetPair {
    pub popup: Stylesheet,
    pub list: Stylesheet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderedResource {
    pub resource_id: ResourceId,
    pub popup_html: String,
    pub list_row_html: String,
    pub status: ResourceStatus,
    pub stale: bool,
}

pub fn status_of(info: Option<&ResourceInfo>) -> ResourceStatus {
    info.map_or(ResourceStatus::Unknown, |i| i.status)
}

/// Whether `info` was gathered more than three monitor intervals before `now`.
/// A resource that was never polled is not stale, only unknown.
pub fn is_stale(info: Option<&ResourceInfo>, now: DateTime<Utc>, interval: Duration) -> bool {
    info.is_some_and(|i| now - i.gathered_at > interval * STALE_INTERVALS)
}

pub fn render_resource(
    resource: &Resource,
    info: Option<&ResourceInfo>,
    styles: Option<&StylesheetPair>,
    now: DateTime<Utc>,
    interval: Duration,
) -> RenderedResource {
    RenderedResource {
        resource_id: resource.id.clone(),
        popup_html: render_popup(resource, info, styles),
        list_row_html: render_list_row(resource, info, styles),
        status: status_of(info),
        stale: is_stale(info, now, interval),
    }
}

/// Transforms an UP payload, or explains why it could not be.
fn transform(info: &ResourceInfo, sheet: &Stylesheet) -> Result<String, String> {
    let doc = Document::parse(&info.payload_xml).map_err(|e| e.to_string())?;
    let out = sheet.apply(&doc).map_err(|e| e.to_string())?;
    if out.trim().is_empty() {
        return Err("stylesheet produced no output".to_string());
    }
    Ok(out)
}

fn styled<'a>(info: Option<&'a ResourceInfo>, sheet: Option<&Stylesheet>) -> Option<(&'a ResourceInfo, Result<String, String>)> {
    let info = info.filter(|i| i.status == ResourceStatus::Up)?;
    let sheet = sheet?;
    Some((info, transform(info, sheet)))
}

pub fn render_popup(resource: &Resource, info: Option<&ResourceInfo>, styles: Option<&StylesheetPair>) -> String {
    let diagnostic = match styled(info, styles.map(|s| &s.popup)) {
        Some((_, Ok(html))) => return html,
        Some((_, Err(e))) => Some(e),
        None => None,
    };
    fallback_popup(resource, info, diagnostic.as_deref())
}

pub fn render_list_row(resource: &Resource, info: Option<&ResourceInfo>, styles: Option<&StylesheetPair>) -> String {
    let diagnostic = match styled(info, styles.map(|s| &s.list)) {
        Some((_, Ok(html))) => match check_cells(&html) {
            Ok(()) => return html,
            Err(e) => Some(e),
        },
        Some((_, Err(e))) => Some(e),
        None => None,
    };
    fallback_row(resource, info, diagnostic.as_deref())
}

/// A list row must be a sequence of `<td>` elements.
fn check_cells(html: &str) -> Result<(), String> {
    let wrapped = alloc::format!("<tr>{html}</tr>");
    let doc = Document::parse(&wrapped).map_err(|e| alloc::format!("list row is not well-formed: {e}"))?;
    let tr = doc.root_element();
    let mut cells = 0;
    for &c in doc.children(tr) {
        match doc.kind(c) {
            NodeKind::Element { name, .. } if name == "td" => cells += 1,
            NodeKind::Text(t) if t.trim().is_empty() => {}
            _ => return Err("list row must contain only <td> elements".to_string()),
        }
    }
    if cells == 0 {
        return Err("list row has no cells".to_string());
    }
    Ok(())
}

fn timestamp(at: DateTime<Utc>) -> String {
    at.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn status_class(status: ResourceStatus) -> &'static str {
    match status {
        ResourceStatus::Up => "gw-up",
        ResourceStatus::Down => "gw-down",
        ResourceStatus::Unknown => "gw-unknown",
    }
}

fn fallback_popup(resource: &Resource, info: Option<&ResourceInfo>, diagnostic: Option<&str>) -> String {
    let status = status_of(info);
    let mut out = String::new();
    out.push_str("<div class=\"gw-popup ");
    out.push_str(status_class(status));
    out.push_str("\"><h3>");
    escape::push_text(&mut out, &resource.label);
    out.push_str("</h3><p class=\"gw-status\">");
    out.push_str(status.as_str());
    out.push_str("</p>");
    match info {
        None => out.push_str("<p>No information has been gathered yet.</p>"),
        Some(info) => {
            if let Some(err) = &info.error {
                out.push_str("<p class=\"gw-error\">");
                escape::push_text(&mut out, err);
                out.push_str("</p>");
            }
            out.push_str("<p class=\"gw-time\">Gathered ");
            escape::push_text(&mut out, &timestamp(info.gathered_at));
            out.push_str("</p>");
            let pairs = leaf_pairs(&info.payload_xml);
            if !pairs.is_empty() {
                out.push_str("<dl>");
                for (name, value) in pairs {
                    out.push_str("<dt>");
                    escape::push_text(&mut out, &name);
                    out.push_str("</dt><dd>");
                    escape::push_text(&mut out, &value);
                    out.push_str("</dd>");
                }
                out.push_str("</dl>");
            }
        }
    }
    if let Some(d) = diagnostic {
        out.push_str("<p class=\"gw-diagnostic\">Stylesheet error: ");
        escape::push_text(&mut out, d);
        out.push_str("</p>");
    }
    out.push_str("</div>");
    out
}

/// Name and text of every element without element children.
fn leaf_pairs(payload: &str) -> Vec<(String, String)> {
    let Ok(doc) = Document::parse(payload) else {
        return Vec::new();
    };
    doc.descendants(doc.root())
        .filter(|&n| doc.is_element(n) && !doc.children(n).iter().any(|&c| doc.is_element(c)))
        .map(|n| {
            (
                doc.name(n).unwrap_or_default().to_string(),
                doc.string_value(n).trim().to_string(),
            )
        })
        .collect()
}

fn fallback_row(resource: &Resource, info: Option<&ResourceInfo>, diagnostic: Option<&str>) -> String {
    let status = status_of(info);
    let mut out = String::new();
    out.push_str("<td>");
    escape::push_text(&mut out, &resource.label);
    out.push_str("</td><td>");
    escape::push_text(&mut out, &resource.resource_type);
    out.push_str("</td><td class=\"gw-status ");
    out.push_str(status_class(status));
    out.push('"');
    if let Some(d) = diagnostic {
        out.push_str(" title=\"");
        escape::push_attr(&mut out, d);
        out.push('"');
    }
    out.push('>');
    out.push_str(status.as_str());
    if let Some(err) = info.and_then(|i| i.error.as_deref()) {
        out.push_str(": ");
        escape::push_text(&mut out, err);
    }
    out.push_str("</td><td>");
    match info {
        Some(i) => escape::push_text(&mut out, &timestamp(i.gathered_at)),
        None => out.push_str("never"),
    }
    out.push_str("</td>");
    out
}
