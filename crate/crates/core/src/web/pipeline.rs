use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::integrate::web_entity_id;
use super::types::{FilteredEvidence, Passage, SearchProvider, Stance, WebDocument, WebError, WebQuery, WebTriplet};
use crate::evidence::render_evidence;
use crate::kg::{EntityId, KgBackend, KnowledgeSubgraph, RelationId, Triplet};
use crate::llm::{CallPurpose, FieldKind, Gateway, LlmError, LlmRequest, PromptPolicy, Schema};
use crate::prompts;
use crate::text::{collapse_whitespace, normalize_label};

/// Passages sent to the LLM filter in one call.
pub const FILTER_BATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WebConfig {
    /// Documents requested from the provider.
    pub documents: usize,
    /// Top BM25 passages handed to the LLM filter.
    pub fine_candidates: usize,
    /// Minimum consistency confidence to keep a passage.
    pub threshold: f64,
}

impl Default for WebConfig {
    fn default() -> Self {
        Self {
            documents: 10,
            fine_candidates: 8,
            threshold: 0.5,
        }
    }
}

/// Asks for a focused query. With no evidence at all the claim itself is
/// the query and no LLM call is made.
pub fn formulate_query(
    claim: &str,
    subgraph: &KnowledgeSubgraph,
    web: &[FilteredEvidence],
    policy: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> Result<WebQuery, WebError> {
    if subgraph.is_empty() && web.is_empty() {
        return Ok(WebQuery::new(
            claim,
            "no evidence retrieved yet; searching for the claim itself",
        ));
    }
    let schema = Schema::new()
        .required("query", FieldKind::Text { non_empty: true })
        .optional("rationale", FieldKind::Text { non_empty: false });
    let request = LlmRequest::new(prompts::FORMULATE_QUERY)
        .bind("claim", claim)
        .bind("evidence", render_evidence(subgraph, web));
    let parsed = gateway
        .complete_structured(policy, &request, &schema, CallPurpose::QueryFormulation)?
        .parsed
        .unwrap_or_default();
    let text = parsed["query"].as_str().unwrap_or(claim);
    let rationale = parsed
        .get("rationale")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    Ok(WebQuery::new(text, rationale))
}

/// Top `m` documents by provider rank.
pub fn search(query: &WebQuery, m: usize, provider: &dyn SearchProvider) -> Result<Vec<WebDocument>, WebError> {
    if m == 0 {
        return Err(WebError::InvalidArgument("m must be at least 1"));
    }
    let mut docs = provider.search(&query.text, m)?;
    docs.retain(WebDocument::has_absolute_url);
    docs.sort_by_key(|d| d.provider_rank);
    docs.dedup_by_key(|d| d.provider_rank);
    docs.truncate(m);
    Ok(docs)
}

fn parse_stance(value: Option<&Value>) -> Stance {
    match value.and_then(Value::as_str).map(str::to_ascii_lowercase).as_deref() {
        Some("supports") | Some("support") | Some("supported") => Stance::Supports,
        Some("refutes") | Some("refute") | Some("refuted") => Stance::Refutes,
        _ => Stance::Neutral,
    }
}

/// Scores passages in batches of [`FILTER_BATCH`] and keeps those whose
/// consistency confidence reaches `threshold`. Order is preserved.
pub fn filter_evidence(
    claim: &str,
    passages: &[Passage],
    threshold: f64,
    policy: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> Result<Vec<FilteredEvidence>, WebError> {
    if passages.is_empty() {
        return Err(WebError::InvalidArgument("no passages to filter"));
    }
    let item = Schema::new()
        .required("index", FieldKind::Integer)
        .required("confidence", FieldKind::Number)
        .optional("stance", FieldKind::Any);
    let schema = Schema::new().required("items", FieldKind::Array(Box::new(FieldKind::Object(item))));
    let mut kept = Vec::new();
    for batch in passages.chunks(FILTER_BATCH) {
        let listing = batch
            .iter()
            .enumerate()
            .map(|(i, p)| alloc::format!("P{} | {} | {}", i + 1, p.source_url, collapse_whitespace(&p.text)))
            .collect::<Vec<_>>()
            .join("\n");
        let request = LlmRequest::new(prompts::FILTER_EVIDENCE)
            .bind("claim", claim)
            .bind("passages", listing);
        let parsed = gateway
            .complete_structured(policy, &request, &schema, CallPurpose::EvidenceFilter)?
            .parsed
            .unwrap_or_default();
        let mut verdicts: Vec<(f64, Stance)> = alloc::vec![(0.0, Stance::Neutral); batch.len()];
        for entry in parsed["items"].as_array().into_iter().flatten() {
            let Some(index) = entry["index"].as_u64().map(|i| i as usize) else {
                continue;
            };
            if index == 0 || index > batch.len() {
                gateway.warn(alloc::format!("evidence filter: passage index {index} out of range"));
                continue;
            }
            let mut confidence = entry["confidence"].as_f64().unwrap_or(0.0);
            if !(0.0..=1.0).contains(&confidence) {
                gateway.warn(alloc::format!(
                    "evidence filter: confidence {confidence} clamped to [0, 1]"
                ));
                confidence = confidence.clamp(0.0, 1.0);
            }
            verdicts[index - 1] = (confidence, parse_stance(entry.get("stance")));
        }
        for (passage, (confidence, stance)) in batch.iter().zip(verdicts) {
            if confidence >= threshold {
                kept.push(FilteredEvidence {
                    passage: passage.clone(),
                    consistency_confidence: confidence,
                    stance,
                });
            }
        }
    }
    Ok(kept)
}

fn resolve_entity(surface: &str, linker: &dyn KgBackend) -> Result<EntityId, WebError> {
    let surface = collapse_whitespace(surface);
    match linker.search_entities(&surface, 1)?.into_iter().next() {
        Some(e) => Ok(e),
        None => Ok(EntityId::new(web_entity_id(&surface), surface)),
    }
}

/// Extracts triplets from each evidence item with one structured call per
/// item. Items whose reply cannot be parsed are skipped.
pub fn to_triplets(
    claim: &str,
    evidence: &[FilteredEvidence],
    linker: &dyn KgBackend,
    policy: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> Result<Vec<WebTriplet>, WebError> {
    if evidence.is_empty() {
        return Err(WebError::InvalidArgument("no evidence to convert"));
    }
    let triple = Schema::new()
        .required("subject", FieldKind::Text { non_empty: true })
        .required("relation", FieldKind::Text { non_empty: true })
        .required("object", FieldKind::Text { non_empty: true });
    let schema = Schema::new().required("triplets", FieldKind::Array(Box::new(FieldKind::Object(triple))));
    let mut out = Vec::new();
    for (i, item) in evidence.iter().enumerate() {
        let request = LlmRequest::new(prompts::EXTRACT_TRIPLETS)
            .bind("claim", claim)
            .bind("passage", collapse_whitespace(&item.passage.text));
        let parsed = match gateway.complete_structured(policy, &request, &schema, CallPurpose::TripletExtraction) {
            Ok(resp) => resp.parsed.unwrap_or_default(),
            Err(LlmError::ParseFailure { .. }) => {
                gateway.warn(alloc::format!(
                    "triplet extraction skipped for {}",
                    item.passage.source_url
                ));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        for raw in parsed["triplets"].as_array().into_iter().flatten() {
            let text = |k: &str| raw[k].as_str().unwrap_or("").to_string();
            let subject = resolve_entity(&text("subject"), linker)?;
            let object = resolve_entity(&text("object"), linker)?;
            let label = collapse_whitespace(&text("relation"));
            let relation = RelationId::new(alloc::format!("W:{}", normalize_label(&label).replace(' ', "_")), label);
            let confidence = item.consistency_confidence.clamp(0.0, 1.0);
            out.push(WebTriplet {
                triplet: Triplet::web(subject, relation, object, confidence, item.passage.source_url.clone()),
                provenance: item.passage.source_url.clone(),
                confidence,
                schema_aligned: false,
                evidence_index: i,
            });
        }
    }
    if out.is_empty() {
        return Err(WebError::AllItemsFailed);
    }
    Ok(out)
}
