//! Web evidence: query formulation, coarse BM25 ranking, LLM filtering and
//! fusion into the knowledge subgraph.

mod bm25;
mod fixture;
mod integrate;
mod pipeline;
mod types;

pub use bm25::{rank_passages, split_passages, Bm25, MAX_PASSAGE_CHARS};
pub use fixture::FixtureSearch;
pub use integrate::{integrate, web_entity_id, Disposition, IntegrationReport};
pub use pipeline::{filter_evidence, formulate_query, search, to_triplets, WebConfig, FILTER_BATCH};
pub use types::{
    FilteredEvidence, Passage, SearchProvider, Stance, WebDocument, WebError, WebQuery, WebTriplet, MAX_QUERY_CHARS,
};
