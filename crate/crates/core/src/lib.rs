//! Agentic claim verification over knowledge-graph and web evidence.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! network or the filesystem lives behind the traits in [`llm`], [`kg`] and
//! [`web`], so the whole pipeline can run against in-memory fixtures.
//!
//! - [`llm`]: prompt templates, the per-episode [`llm::Gateway`] and
//!   structured-output parsing.
//! - [`kg`]: mention extraction, entity linking and expand-and-prune beam
//!   search over a knowledge graph.
//! - [`web`]: query formulation, BM25 coarse ranking, LLM filtering and
//!   fusion of web facts into the subgraph.
//! - [`agent`]: the episode loop that picks retrieval actions and produces a
//!   verdict.
//! - [`optimize`]: self-reflection, composite reward and textual-gradient
//!   prompt updates.
//! - [`eval`]: dataset loading, label normalization, balanced accuracy and the
//!   error taxonomy.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agent;
pub mod eval;
pub mod evidence;
pub mod kg;
pub mod llm;
pub mod optimize;
pub mod prompts;
pub mod text;
pub mod web;

#[cfg(test)]
mod testutil;

pub use agent::{run_episode, Environment, EpisodeConfig, Label, Trajectory, VerdictResult};
pub use kg::{KgBackend, KnowledgeSubgraph, Triplet};
pub use llm::{Gateway, LlmBackend, PromptPolicy, PromptTemplate};
pub use web::SearchProvider;
