//! Runtime for `claimcheck-core`: live HTTP backends (chat completions,
//! Wikidata, Serper), interaction cassettes for offline replay, JSON
//! configuration, batch runners and a test kit of deterministic
//! environments.

pub mod cassette;
pub mod config;
pub mod http;
pub mod runner;
pub mod testkit;

pub use config::{AppConfig, BackendKind};
pub use runner::{evaluate, EvalOptions, Evaluation, Services};
