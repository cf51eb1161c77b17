//! Expand-and-prune beam search.
//!
//! Each hop expands at most `k` frontier entities (one listwise LLM call
//! picks them when the frontier is wider than `k`). Expanding an entity runs
//! the outgoing and incoming relation queries, which together count as one
//! query against the `k * N` budget, then one LLM call keeps the top `k`
//! relations. Over `N` hops that is at most `k * N` queries and `N + k * N`
//! pruning calls.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::mentions::extract_mentions;
use super::subgraph::KnowledgeSubgraph;
use super::types::{
    Direction, EntityId, EntityMention, KgBackend, KgError, RelationCandidate, RetrievalBudget, Triplet,
};
use crate::llm::{CallPurpose, FieldKind, Gateway, LlmRequest, PromptPolicy, Schema};
use crate::prompts;
use crate::text::token_set;

/// Rows fetched per direction in one relation query.
pub const ROWS_PER_DIRECTION: usize = 50;
/// Object entities kept per retained relation.
pub const OBJECTS_PER_RELATION: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgConfig {
    /// Beam width.
    pub k: u32,
    /// Maximum hops per episode.
    pub n_hops: u32,
    /// Hops run inside the initial retrieval.
    pub n_init: u32,
    pub objects_per_relation: usize,
}

impl Default for KgConfig {
    fn default() -> Self {
        Self {
            k: 4,
            n_hops: 4,
            n_init: 1,
            objects_per_relation: OBJECTS_PER_RELATION,
        }
    }
}

pub struct KgContext<'a> {
    pub backend: &'a dyn KgBackend,
    pub policy: &'a PromptPolicy,
    pub config: KgConfig,
}

/// Retrieval state owned by one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgState {
    pub subgraph: KnowledgeSubgraph,
    pub frontier: Vec<EntityId>,
    pub visited: BTreeSet<String>,
    pub budget: RetrievalBudget,
    pub mentions: Vec<EntityMention>,
}

impl KgState {
    pub fn new(config: &KgConfig) -> Self {
        Self {
            subgraph: KnowledgeSubgraph::new(),
            frontier: Vec::new(),
            visited: BTreeSet::new(),
            budget: RetrievalBudget::new(config.k, config.n_hops),
            mentions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HopOutcome {
    pub expanded: Vec<EntityId>,
    pub added: Vec<Triplet>,
    pub new_frontier: Vec<EntityId>,
}

/// Links each mention to its top-ranked entity. Unlinkable mentions are
/// dropped; the result keeps first-occurrence order without duplicates.
pub fn link_entities(mentions: &mut [EntityMention], backend: &dyn KgBackend) -> Result<Vec<EntityId>, KgError> {
    let mut linked: Vec<EntityId> = Vec::new();
    for m in mentions.iter_mut() {
        m.candidate_ids = backend.search_entities(&m.surface, 5)?;
        if let Some(top) = m.candidate_ids.first() {
            if !linked.contains(top) {
                linked.push(top.clone());
            }
        }
    }
    if linked.is_empty() {
        return Err(KgError::AllMentionsUnlinkable);
    }
    Ok(linked)
}

/// Orders objects by how many claim tokens their label shares (more first),
/// then by ascending id, and keeps `limit`.
pub fn select_objects(mut objects: Vec<EntityId>, claim_tokens: &BTreeSet<String>, limit: usize) -> Vec<EntityId> {
    objects.sort();
    objects.dedup();
    let overlap = |e: &EntityId| token_set(&e.label).intersection(claim_tokens).count();
    objects.sort_by(|a, b| overlap(b).cmp(&overlap(a)).then_with(|| a.id.cmp(&b.id)));
    objects.truncate(limit);
    objects
}

/// Runs one directional relation query and groups rows by relation.
pub fn fetch_relations(
    backend: &dyn KgBackend,
    entity: &EntityId,
    direction: Direction,
    limit: usize,
    claim_tokens: &BTreeSet<String>,
) -> Result<Vec<RelationCandidate>, KgError> {
    let mut grouped: BTreeMap<String, (super::RelationId, Vec<EntityId>)> = BTreeMap::new();
    for edge in backend.edges(entity, direction)? {
        grouped
            .entry(edge.relation.id.clone())
            .or_insert_with(|| (edge.relation.clone(), Vec::new()))
            .1
            .push(edge.other);
    }
    Ok(grouped
        .into_values()
        .map(|(relation, objects)| RelationCandidate {
            relation,
            direction,
            anchor: entity.clone(),
            score: 0.0,
            sample_objects: select_objects(objects, claim_tokens, limit),
        })
        .collect())
}

/// Both directions for one entity; counts as a single query.
pub fn fetch_neighborhood(
    backend: &dyn KgBackend,
    entity: &EntityId,
    budget: &mut RetrievalBudget,
    limit: usize,
    claim_tokens: &BTreeSet<String>,
) -> Result<Vec<RelationCandidate>, KgError> {
    budget.sparql_queries_used += 1;
    let mut all = fetch_relations(backend, entity, Direction::Outgoing, limit, claim_tokens)?;
    all.extend(fetch_relations(
        backend,
        entity,
        Direction::Incoming,
        limit,
        claim_tokens,
    )?);
    Ok(all)
}

fn candidate_order(a: &RelationCandidate, b: &RelationCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.relation.id.cmp(&b.relation.id))
        .then_with(|| a.anchor.id.cmp(&b.anchor.id))
        .then_with(|| a.direction.cmp(&b.direction))
}

/// Sorts scored candidates (descending score, then relation id, anchor id,
/// direction) and keeps `k`.
pub fn rank_candidates(mut candidates: Vec<RelationCandidate>, k: usize) -> Vec<RelationCandidate> {
    candidates.sort_by(candidate_order);
    candidates.truncate(k);
    candidates
}

/// Sorts `(entity, score)` pairs by descending score then ascending id and
/// keeps `k`.
pub fn rank_entities(mut scored: Vec<(EntityId, f64)>, k: usize) -> Vec<EntityId> {
    scored.sort_by(|(ea, sa), (eb, sb)| sb.total_cmp(sa).then_with(|| ea.id.cmp(&eb.id)));
    scored.into_iter().take(k).map(|(e, _)| e).collect()
}

fn scores_schema() -> Schema {
    Schema::new().required("scores", FieldKind::Array(Box::new(FieldKind::Number)))
}

fn read_scores(
    gateway: &mut Gateway<'_>,
    parsed: &serde_json::Map<String, Value>,
    expected: usize,
    what: &str,
) -> Vec<f64> {
    let mut scores: Vec<f64> = parsed["scores"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    if scores.len() != expected {
        gateway.warn(alloc::format!(
            "{what}: expected {expected} scores, got {}; missing scores count as 0",
            scores.len()
        ));
        scores.resize(expected, 0.0);
    }
    scores
}

fn describe_objects(objects: &[EntityId]) -> String {
    objects
        .iter()
        .map(|o| alloc::format!("{} [{}]", o.label, o.id))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Keeps the `k` candidates the LLM scores as most relevant to the claim.
/// Exactly one LLM call.
pub fn prune_relations(
    claim: &str,
    candidates: Vec<RelationCandidate>,
    k: u32,
    policy: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> Result<Vec<RelationCandidate>, KgError> {
    if candidates.is_empty() {
        return Err(KgError::NoCandidates);
    }
    let listing = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let dir = match c.direction {
                Direction::Outgoing => "outgoing",
                Direction::Incoming => "incoming",
            };
            alloc::format!(
                "C{} | {dir} | {} [{}] | {} [{}] | {}",
                i + 1,
                c.anchor.label,
                c.anchor.id,
                c.relation.label,
                c.relation.id,
                describe_objects(&c.sample_objects)
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    let request = LlmRequest::new(prompts::PRUNE_RELATIONS)
        .bind("claim", claim)
        .bind("k", k.to_string())
        .bind("candidates", listing);
    let response = gateway.complete_structured(policy, &request, &scores_schema(), CallPurpose::RelationPruning)?;
    let parsed = response.parsed.unwrap_or_default();
    let scores = read_scores(gateway, &parsed, candidates.len(), "relation pruning");
    let scored = candidates
        .into_iter()
        .zip(scores)
        .map(|(c, score)| RelationCandidate { score, ..c })
        .collect();
    Ok(rank_candidates(scored, k as usize))
}

/// Picks the `k` frontier entities worth expanding. One LLM call.
pub fn prune_frontier(
    claim: &str,
    subgraph: &KnowledgeSubgraph,
    frontier: Vec<EntityId>,
    k: u32,
    policy: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> Result<Vec<EntityId>, KgError> {
    let listing = frontier
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let via = subgraph
                .triplets()
                .find(|t| t.subject == *e || t.object == *e)
                .map(|t| {
                    alloc::format!(
                        " | via {} -- {} [{}] --> {}",
                        t.subject.label,
                        t.relation.label,
                        t.relation.id,
                        t.object.label
                    )
                })
                .unwrap_or_default();
            alloc::format!("E{} | {} [{}]{via}", i + 1, e.label, e.id)
        })
        .collect::<Vec<_>>()
        .join("\n");
    let request = LlmRequest::new(prompts::PRUNE_FRONTIER)
        .bind("claim", claim)
        .bind("k", k.to_string())
        .bind("entities", listing);
    let response = gateway.complete_structured(policy, &request, &scores_schema(), CallPurpose::FrontierPruning)?;
    let parsed = response.parsed.unwrap_or_default();
    let scores = read_scores(gateway, &parsed, frontier.len(), "frontier pruning");
    Ok(rank_entities(frontier.into_iter().zip(scores).collect(), k as usize))
}

/// One expand-and-prune round over the current frontier.
///
/// Already-visited entities are skipped without queries. New entities get
/// `hop(anchor) + 1` and become the next frontier.
pub fn expand_hop(
    state: &mut KgState,
    claim: &str,
    ctx: &KgContext<'_>,
    gateway: &mut Gateway<'_>,
) -> Result<HopOutcome, KgError> {
    if state.frontier.is_empty() {
        return Err(KgError::EmptyFrontier);
    }
    if state.budget.hops_remaining() == 0 {
        return Err(KgError::BudgetExhausted(state.budget.n_hops));
    }
    state.budget.hops_used += 1;
    let k = state.budget.k;
    let mut pending: Vec<EntityId> = core::mem::take(&mut state.frontier)
        .into_iter()
        .filter(|e| !state.visited.contains(&e.id))
        .collect();
    pending.sort();
    pending.dedup();
    let mut outcome = HopOutcome::default();
    if pending.is_empty() {
        return Ok(outcome);
    }
    if pending.len() > k as usize {
        state.budget.llm_calls_used += 1;
        pending = prune_frontier(claim, &state.subgraph, pending, k, ctx.policy, gateway)?;
    }

    let claim_tokens = token_set(claim);
    let mut fresh: BTreeSet<EntityId> = BTreeSet::new();
    for entity in pending {
        state.visited.insert(entity.id.clone());
        let candidates = fetch_neighborhood(
            ctx.backend,
            &entity,
            &mut state.budget,
            ctx.config.objects_per_relation,
            &claim_tokens,
        )?;
        outcome.expanded.push(entity.clone());
        if candidates.is_empty() {
            continue;
        }
        state.budget.llm_calls_used += 1;
        let retained = prune_relations(claim, candidates, k, ctx.policy, gateway)?;
        debug_assert!(retained.len() <= k as usize);
        for candidate in retained {
            let aliases = ctx.backend.relation_aliases(&candidate.relation);
            if !aliases.is_empty() {
                state.subgraph.add_relation_aliases(&candidate.relation.id, aliases);
            }
            for other in candidate.sample_objects {
                let is_new = !state.subgraph.contains_entity(&other.id);
                let triplet = match candidate.direction {
                    Direction::Outgoing => Triplet::kg(entity.clone(), candidate.relation.clone(), other.clone()),
                    Direction::Incoming => Triplet::kg(other.clone(), candidate.relation.clone(), entity.clone()),
                };
                if state.subgraph.insert(triplet.clone()) {
                    outcome.added.push(triplet);
                    if is_new {
                        fresh.insert(other);
                    }
                }
            }
        }
    }
    outcome.new_frontier = fresh.into_iter().collect();
    state.frontier = outcome.new_frontier.clone();
    Ok(outcome)
}

/// Entity extraction, linking and `n_init` expansion rounds. An unlinkable
/// claim yields an empty subgraph rather than an error.
pub fn init_kg_retrieval(
    claim: &str,
    ctx: &KgContext<'_>,
    gateway: &mut Gateway<'_>,
) -> Result<(KgState, HopOutcome), KgError> {
    let mut state = KgState::new(&ctx.config);
    let mut mentions = extract_mentions(claim)?;
    let mut total = HopOutcome::default();
    if mentions.is_empty() {
        return Ok((state, total));
    }
    let linked = match link_entities(&mut mentions, ctx.backend) {
        Ok(linked) => linked,
        Err(KgError::AllMentionsUnlinkable) => {
            state.mentions = mentions;
            return Ok((state, total));
        }
        Err(e) => return Err(e),
    };
    state.mentions = mentions;
    for entity in &linked {
        state.subgraph.add_topic(entity);
    }
    state.frontier = linked;
    for _ in 0..ctx.config.n_init {
        if state.frontier.is_empty() || state.budget.hops_remaining() == 0 {
            break;
        }
        let hop = expand_hop(&mut state, claim, ctx, gateway)?;
        total.expanded.extend(hop.expanded);
        total.added.extend(hop.added);
        total.new_frontier = hop.new_frontier;
    }
    Ok((state, total))
}

/// One more hop on demand. An empty frontier still spends the hop.
pub fn expand_kg(
    state: &mut KgState,
    claim: &str,
    ctx: &KgContext<'_>,
    gateway: &mut Gateway<'_>,
) -> Result<HopOutcome, KgError> {
    if state.budget.hops_remaining() == 0 {
        return Err(KgError::BudgetExhausted(state.budget.n_hops));
    }
    if state.frontier.iter().all(|e| state.visited.contains(&e.id)) {
        state.budget.hops_used += 1;
        state.frontier.clear();
        return Ok(HopOutcome::default());
    }
    expand_hop(state, claim, ctx, gateway)
}

#[cfg(test)]
mod tests;
