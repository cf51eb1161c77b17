//! Knowledge-graph evidence: entity linking and expand-and-prune beam search.

mod fixture;
mod mentions;
mod retrieval;
mod subgraph;
mod types;

pub use fixture::{FixtureEntity, FixtureGraph, FixtureRelation};
pub use mentions::extract_mentions;
pub use retrieval::{
    expand_hop, expand_kg, fetch_neighborhood, fetch_relations, init_kg_retrieval, link_entities, prune_frontier,
    prune_relations, rank_candidates, rank_entities, select_objects, HopOutcome, KgConfig, KgContext, KgState,
    OBJECTS_PER_RELATION, ROWS_PER_DIRECTION,
};
pub use subgraph::{KnowledgeSubgraph, TripletKey};
pub use types::{
    Direction, Edge, EntityId, EntityMention, KgBackend, KgError, Origin, RelationCandidate, RelationId,
    RetrievalBudget, Triplet,
};
