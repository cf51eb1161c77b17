use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::LlmError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KgError {
    #[error("claim is empty")]
    EmptyClaim,
    #[error("no mention could be linked to a knowledge-graph entity")]
    AllMentionsUnlinkable,
    #[error("expansion frontier is empty")]
    EmptyFrontier,
    #[error("hop budget exhausted ({0} hops)")]
    BudgetExhausted(u32),
    #[error("no relation candidates to prune")]
    NoCandidates,
    #[error("knowledge-graph transport error: {0}")]
    Transport(String),
    #[error("knowledge-graph query timed out")]
    QueryTimeout,
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// A graph node. Equality and ordering look at `id` only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityId {
    pub id: String,
    pub label: String,
}

/// A graph edge label. Equality and ordering look at `id` only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationId {
    pub id: String,
    pub label: String,
}

macro_rules! id_ordering {
    ($t:ty) => {
        impl $t {
            pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
                Self {
                    id: id.into(),
                    label: label.into(),
                }
            }
        }
        impl PartialEq for $t {
            fn eq(&self, other: &Self) -> bool {
                self.id == other.id
            }
        }
        impl Eq for $t {}
        impl PartialOrd for $t {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for $t {
            fn cmp(&self, other: &Self) -> Ordering {
                self.id.cmp(&other.id)
            }
        }
    };
}

id_ordering!(EntityId);
id_ordering!(RelationId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Kg,
    Web,
}

/// A `(subject, relation, object)` fact. Identity ignores origin and
/// confidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Triplet {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
    pub origin: Origin,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl Triplet {
    pub fn kg(subject: EntityId, relation: RelationId, object: EntityId) -> Self {
        Self {
            subject,
            relation,
            object,
            origin: Origin::Kg,
            confidence: 1.0,
            source: None,
        }
    }

    pub fn web(subject: EntityId, relation: RelationId, object: EntityId, confidence: f64, source: String) -> Self {
        Self {
            subject,
            relation,
            object,
            origin: Origin::Web,
            confidence: confidence.clamp(0.0, 1.0),
            source: Some(source),
        }
    }

    pub fn key(&self) -> super::TripletKey {
        super::TripletKey::of(self)
    }

    /// Reference string used in prompts and citations.
    pub fn reference(&self) -> String {
        alloc::format!("t:{}|{}|{}", self.subject.id, self.relation.id, self.object.id)
    }
}

impl PartialEq for Triplet {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Triplet {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    /// Character offsets `[start, end)` into the claim.
    pub span: (usize, usize),
    pub candidate_ids: Vec<EntityId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// One result row of a relation query: the relation and the entity at the
/// other end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub relation: RelationId,
    pub other: EntityId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCandidate {
    pub relation: RelationId,
    pub direction: Direction,
    pub anchor: EntityId,
    /// Relevance from the pruning call; comparable within one call only.
    pub score: f64,
    pub sample_objects: Vec<EntityId>,
}

/// Beam width, hop limit and the counters the cost model is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalBudget {
    pub k: u32,
    pub n_hops: u32,
    pub hops_used: u32,
    pub sparql_queries_used: u32,
    pub llm_calls_used: u32,
}

impl RetrievalBudget {
    pub fn new(k: u32, n_hops: u32) -> Self {
        Self {
            k: k.max(1),
            n_hops: n_hops.max(1),
            hops_used: 0,
            sparql_queries_used: 0,
            llm_calls_used: 0,
        }
    }

    pub fn hops_remaining(&self) -> u32 {
        self.n_hops.saturating_sub(self.hops_used)
    }

    pub fn max_sparql_queries(&self) -> u32 {
        self.k * self.n_hops
    }

    pub fn max_llm_calls(&self) -> u32 {
        self.n_hops + self.k * self.n_hops
    }
}

/// Read access to a knowledge graph.
pub trait KgBackend {
    /// Entity search ranked by the backend, best first.
    fn search_entities(&self, text: &str, limit: usize) -> Result<Vec<EntityId>, KgError>;

    /// Relations where `entity` is the subject (`Outgoing`) or the object
    /// (`Incoming`). Backends cap rows per direction.
    fn edges(&self, entity: &EntityId, direction: Direction) -> Result<Vec<Edge>, KgError>;

    /// Alternative labels used when aligning web relations to the schema.
    fn relation_aliases(&self, _relation: &RelationId) -> Vec<String> {
        Vec::new()
    }
}

impl<B: KgBackend + ?Sized> KgBackend for &B {
    fn search_entities(&self, text: &str, limit: usize) -> Result<Vec<EntityId>, KgError> {
        (**self).search_entities(text, limit)
    }

    fn edges(&self, entity: &EntityId, direction: Direction) -> Result<Vec<Edge>, KgError> {
        (**self).edges(entity, direction)
    }

    fn relation_aliases(&self, relation: &RelationId) -> Vec<String> {
        (**self).relation_aliases(relation)
    }
}
