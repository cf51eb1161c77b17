//! Template ids and the seed prompt texts.
//!
//! Seed texts are drafts: the optimizer rewrites the trainable ones. Every
//! template keeps one `Label: {placeholder}` line (or block) per binding so
//! replies can be audited against the exact inputs.

use crate::llm::{ExpectedOutput, PromptPolicy, PromptTemplate};

pub const SELECT_ACTION: &str = "select_action";
pub const ASSESS_SUFFICIENCY: &str = "assess_sufficiency";
pub const PRUNE_FRONTIER: &str = "prune_frontier";
pub const PRUNE_RELATIONS: &str = "prune_relations";
pub const FORMULATE_QUERY: &str = "formulate_query";
pub const FILTER_EVIDENCE: &str = "filter_evidence";
pub const EXTRACT_TRIPLETS: &str = "extract_triplets";
pub const VERDICT: &str = "verdict";
pub const FORCED_VERDICT: &str = "forced_verdict";
pub const REFLECT: &str = "reflect";
pub const TEXTUAL_GRADIENT: &str = "textual_gradient";

/// Templates the optimizer is allowed to rewrite.
pub const TRAINABLE: &[&str] = &[SELECT_ACTION, ASSESS_SUFFICIENCY, VERDICT];

const SELECT_ACTION_TEXT: &str = "\
You coordinate evidence retrieval for verifying a factual claim. Pick the next action.
- expandKg: grow the knowledge graph by one hop when entities related to the claim are present but the needed fact is not.
- webSearch: search the web when the knowledge graph cannot cover the missing information.
- verdict: stop retrieving when the evidence already confirms or contradicts the claim.
Follow the latest sufficiency assessment unless the history shows it is wrong.
Claim: {claim}
Evidence summary: {evidence_summary}
History:
{history}
Sufficiency: {sufficiency}
Legal actions: {legal_actions}
Reply with JSON {{\"action\": \"<one legal action>\", \"reason\": \"<short reason>\"}}";

const ASSESS_SUFFICIENCY_TEXT: &str = "\
Decide whether the evidence is enough to judge the claim.
Answer sufficient only when some evidence item directly confirms or contradicts the claim.
Answer need_kg when related entities are present but the deciding fact may be one more hop away.
Answer need_web when the knowledge graph is unlikely to contain the deciding fact.
Claim: {claim}
Evidence:
{evidence}
Reply with JSON {{\"assessment\": \"sufficient\" | \"need_kg\" | \"need_web\", \"missing\": \"<what is missing>\"}}";

const PRUNE_FRONTIER_TEXT: &str = "\
Score how useful it is to expand each entity for verifying the claim, from 0 (irrelevant) to 10 (essential).
Claim: {claim}
Keep: {k}
Entities:
{entities}
Reply with JSON {{\"scores\": [<one number per entity, in order>]}}";

const PRUNE_RELATIONS_TEXT: &str = "\
Score the relevance of each candidate relation to the claim, from 0 (irrelevant) to 10 (essential).
Claim: {claim}
Keep: {k}
Candidates:
{candidates}
Reply with JSON {{\"scores\": [<one number per candidate, in order>]}}";

const FORMULATE_QUERY_TEXT: &str = "\
The knowledge-graph evidence below does not settle the claim. Write one focused web search query for the missing information.
Claim: {claim}
Evidence:
{evidence}
Reply with JSON {{\"query\": \"<search query>\", \"rationale\": \"<what the query should find>\"}}";

const FILTER_EVIDENCE_TEXT: &str = "\
Re-evaluate each passage for factual relevance and consistency with the claim.
Give a consistency confidence between 0 and 1 and a stance (supports, refutes or neutral).
Claim: {claim}
Passages:
{passages}
Reply with JSON {{\"items\": [{{\"index\": <passage number>, \"confidence\": <0..1>, \"stance\": \"supports\" | \"refutes\" | \"neutral\"}}]}}";

const EXTRACT_TRIPLETS_TEXT: &str = "\
Convert the passage into knowledge triplets (subject, relation, object) using short entity names and relation labels.
Claim: {claim}
Passage: {passage}
Reply with JSON {{\"triplets\": [{{\"subject\": \"...\", \"relation\": \"...\", \"object\": \"...\"}}]}}";

const VERDICT_TEXT: &str = "\
Decide whether the claim is Supported or Refuted using only the evidence. Knowledge-graph facts are more reliable than web facts; when sources disagree, say so in the justification.
Cite the evidence references you rely on.
Claim: {claim}
Evidence:
{evidence}
Reply with JSON {{\"label\": \"Supported\" | \"Refuted\", \"justification\": \"...\", \"citations\": [\"<reference>\"]}}";

const FORCED_VERDICT_TEXT: &str = "\
Retrieval has ended. You must give a verdict now based only on the existing evidence, even if it is incomplete.
Claim: {claim}
Evidence:
{evidence}
Reply with JSON {{\"label\": \"Supported\" | \"Refuted\", \"justification\": \"...\", \"citations\": [\"<reference>\"]}}";

const REFLECT_TEXT: &str = "\
Review the finished verification episode and attribute its outcome to specific decisions.
Use tags: InsufficientCoverage, PrematureTermination, RedundantRetrieval, ContradictionMishandled, Other.
Claim: {claim}
Gold label: {gold}
Predicted label: {predicted}
Steps:
{steps}
Reply with JSON {{\"critiques\": [{{\"tag\": \"...\", \"step\": <step index>, \"text\": \"...\"}}]}}";

const TEXTUAL_GRADIENT_TEXT: &str = "\
The critiques below describe failures of an evidence-retrieval agent. Rewrite the listed prompt templates so the agent avoids these failures.
Keep every {{placeholder}} of a template unchanged.
Critiques:
{critiques}
Templates:
{templates}
Reply with JSON {{\"revisions\": [{{\"template\": \"<template id>\", \"text\": \"<full revised text>\"}}]}}";

/// The seed policy containing every template the pipeline uses.
pub fn default_policy() -> PromptPolicy {
    use ExpectedOutput::Structured;
    [
        (SELECT_ACTION, SELECT_ACTION_TEXT),
        (ASSESS_SUFFICIENCY, ASSESS_SUFFICIENCY_TEXT),
        (PRUNE_FRONTIER, PRUNE_FRONTIER_TEXT),
        (PRUNE_RELATIONS, PRUNE_RELATIONS_TEXT),
        (FORMULATE_QUERY, FORMULATE_QUERY_TEXT),
        (FILTER_EVIDENCE, FILTER_EVIDENCE_TEXT),
        (EXTRACT_TRIPLETS, EXTRACT_TRIPLETS_TEXT),
        (VERDICT, VERDICT_TEXT),
        (FORCED_VERDICT, FORCED_VERDICT_TEXT),
        (REFLECT, REFLECT_TEXT),
        (TEXTUAL_GRADIENT, TEXTUAL_GRADIENT_TEXT),
    ]
    .into_iter()
    .fold(PromptPolicy::new(), |policy, (id, text)| {
        policy.with(PromptTemplate::new(id, text, Structured))
    })
}
