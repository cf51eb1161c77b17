use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::types::{SearchProvider, WebDocument, WebError};
use crate::text::normalize_label;

/// Canned search results keyed by query text.
///
/// Lookup tries the exact query, then a case- and whitespace-insensitive
/// match, then the `*` entry; otherwise the result list is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FixtureSearch {
    results: BTreeMap<String, Vec<WebDocument>>,
}

impl FixtureSearch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    pub fn with_results(mut self, query: impl Into<String>, docs: Vec<WebDocument>) -> Self {
        self.insert(query, docs);
        self
    }

    pub fn insert(&mut self, query: impl Into<String>, docs: Vec<WebDocument>) {
        self.results.entry(query.into()).or_default().extend(docs);
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.results.keys().map(String::as_str)
    }

    fn lookup(&self, query: &str) -> Option<&Vec<WebDocument>> {
        if let Some(docs) = self.results.get(query) {
            return Some(docs);
        }
        let wanted = normalize_label(query);
        self.results
            .iter()
            .find(|(k, _)| normalize_label(k) == wanted)
            .map(|(_, v)| v)
            .or_else(|| self.results.get("*"))
    }
}

impl SearchProvider for FixtureSearch {
    fn search(&self, query: &str, num: usize) -> Result<Vec<WebDocument>, WebError> {
        let mut docs = self.lookup(query).cloned().unwrap_or_default();
        docs.sort_by_key(|d| d.provider_rank);
        docs.truncate(num);
        Ok(docs)
    }
}
