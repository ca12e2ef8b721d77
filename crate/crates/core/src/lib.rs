//! Allocation-only core of the gridwatch monitoring portal.
//!
//! Everything here is pure: the domain model shared by the monitor and the
//! portal server, keyword search, a small XML parser, an XPath subset
//! evaluator, an XSLT subset transform engine, and the HTML fragment
//! renderer built on top of it. Filesystem, network, clocks, and randomness
//! live in the `gridwatch` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod escape;
pub mod model;
pub mod render;
pub mod search;
pub mod xml;
pub mod xpath;
pub mod xslt;

pub use model::{
    Location, MapConfig, ModelError, PortalState, Resource, ResourceId, ResourceInfo, ResourcePatch, ResourceStatus, UNCONFIGURED,
};
pub use render::{RenderedResource, StylesheetPair};
pub use search::search;
pub use xml::{Document, NodeId, XmlError};
pub use xpath::{XPath, XPathError};
pub use xslt::{Stylesheet, StylesheetError, TransformError};
