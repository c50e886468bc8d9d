//! Storage, file formats, network clients, evaluation and the HTTP service
//! around `claimgraph-core`.

pub use claimgraph_core as core;

pub mod engine;
pub mod eval;
pub mod http;
pub mod ingest;
pub mod remote;
pub mod service;
pub mod snapshot;
pub mod wikifier;
