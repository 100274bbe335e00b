//! Configuration, snapshot files and run manifests.

pub mod config;
pub mod manifest;
pub mod snapshot;
