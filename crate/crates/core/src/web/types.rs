use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{KgError, Triplet};
use crate::llm::LlmError;
use crate::text::truncate_chars;

pub const MAX_QUERY_CHARS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WebError {
    #[error("web transport error: {0}")]
    Transport(String),
    #[error("search provider quota exceeded")]
    ProviderQuotaExceeded,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("no triplet could be extracted from any evidence item")]
    AllItemsFailed,
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Kg(#[from] KgError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebQuery {
    pub text: String,
    pub rationale: String,
}

impl WebQuery {
    /// Builds a query, truncating the text to [`MAX_QUERY_CHARS`].
    pub fn new(text: &str, rationale: impl Into<String>) -> Self {
        Self {
            text: truncate_chars(text.trim(), MAX_QUERY_CHARS),
            rationale: rationale.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebDocument {
    pub url: String,
    pub title: String,
    pub snippet: String,
    pub provider_rank: u32,
    /// Full page text, present only when pages were fetched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
}

impl WebDocument {
    pub fn has_absolute_url(&self) -> bool {
        match self.url.split_once("://") {
            Some((scheme, rest)) => {
                !scheme.is_empty()
                    && scheme.chars().all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c))
                    && !rest.is_empty()
            }
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub text: String,
    pub source_url: String,
    /// Position of the passage within its source document.
    pub index: usize,
    pub bm25: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    Supports,
    Refutes,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredEvidence {
    pub passage: Passage,
    pub consistency_confidence: f64,
    pub stance: Stance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebTriplet {
    pub triplet: Triplet,
    pub provenance: String,
    pub confidence: f64,
    pub schema_aligned: bool,
    /// Index of the source item in the evidence list it was extracted from.
    pub evidence_index: usize,
}

/// A web search API.
pub trait SearchProvider {
    fn search(&self, query: &str, num: usize) -> Result<Vec<WebDocument>, WebError>;
}

impl<P: SearchProvider + ?Sized> SearchProvider for &P {
    fn search(&self, query: &str, num: usize) -> Result<Vec<WebDocument>, WebError> {
        (**self).search(query, num)
    }
}
