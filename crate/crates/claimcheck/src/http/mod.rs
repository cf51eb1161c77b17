//! Live HTTP backends: an OpenAI-compatible chat endpoint, Wikidata
//! (SPARQL + entity search) and a Serper-compatible web search API.

mod cache;
mod llm;
mod ratelimit;
mod serper;
mod wikidata;

use std::time::Duration;

use rand::Rng;

pub use cache::ResponseCache;
pub use llm::{parse_chat_response, ChatBackend, ChatSettings};
pub use ratelimit::{Permit, Throttle, ThrottleConfig};
pub use serper::{parse_organic, SerperSearch, SerperSettings};
pub use wikidata::{parse_edges, parse_search, sparql_query, WikidataBackend, WikidataSettings};

/// `base` plus up to 50% random extra, so concurrent clients that failed
/// together do not retry in lockstep.
pub(crate) fn jittered(base: Duration) -> Duration {
    let extra = rand::thread_rng().gen_range(0..=base.as_millis() as u64 / 2);
    base + Duration::from_millis(extra)
}

pub(crate) fn read_key(env_var: &str) -> Option<String> {
    std::env::var(env_var).ok().filter(|v| !v.trim().is_empty())
}
