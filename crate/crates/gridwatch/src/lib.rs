//! Filesystem store, gatherers, poll scheduler, HTTP API and simulated grid
//! services for the gridwatch monitoring portal.
//!
//! The pure parts (model, search, XML/XSLT, rendering) live in
//! [`gridwatch_core`], re-exported here as [`core`].

pub use gridwatch_core as core;

pub mod cli;
pub mod gatherers;
pub mod monitor;
pub mod server;
pub mod simgrid;
pub mod store;
