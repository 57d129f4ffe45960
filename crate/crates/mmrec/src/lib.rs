//! Storage, file formats, HTTP service and CLI around `mmrec-core`.

pub mod cli;
pub mod config;
pub mod formats;
pub mod service;
pub mod store;

pub use config::ServiceConfig;
pub use store::{RecommendResponse, Store};
