//! The four policy decisions: next action, evidence sufficiency, verdict
//! and forced verdict.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Value};

use super::types::{Action, ActionKind, EpisodeEvidence, ForcedReason, Label, Step, Sufficiency, VerdictResult};
use crate::evidence::{render_evidence, summarize};
use crate::kg::KnowledgeSubgraph;
use crate::llm::{CallPurpose, FieldKind, Gateway, LlmError, LlmRequest, PromptPolicy, Schema};
use crate::prompts;
use crate::web::FilteredEvidence;

/// Justification used when even the forced verdict cannot be obtained.
pub const FALLBACK_JUSTIFICATION: &str = "insufficient evidence";

/// Outcome of one action-selection decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Take(Action),
    /// The policy asked for retrieval but no retrieval action is legal.
    Exhausted {
        requested: ActionKind,
    },
}

fn render_history(history: &[Step]) -> String {
    if history.is_empty() {
        return String::from("(none)");
    }
    history
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let o = &s.observation;
            let mut line = alloc::format!(
                "{}. {} -> +{} triplets, +{} annotations, +{} passages, assessment {}",
                i + 1,
                s.action.kind.prompt_name(),
                o.added_triplets,
                o.added_annotations,
                o.added_passages,
                o.sufficiency_hint.as_str()
            );
            if let Some(q) = &s.action.query {
                line.push_str(&alloc::format!(", query \"{}\"", q.text));
            }
            if let Some(note) = &o.note {
                line.push_str(&alloc::format!(" ({note})"));
            }
            line
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Maps an illegal request onto the closest legal action. `None` means the
/// policy wants more retrieval than the budget allows.
pub fn coerce(requested: ActionKind, legal: &[ActionKind]) -> Option<ActionKind> {
    if legal.contains(&ActionKind::InitKgRetrieval) {
        return Some(ActionKind::InitKgRetrieval);
    }
    let preference: &[ActionKind] = match requested {
        ActionKind::InitKgRetrieval => &[ActionKind::ExpandKg, ActionKind::WebSearch],
        ActionKind::ExpandKg => &[ActionKind::ExpandKg, ActionKind::WebSearch],
        ActionKind::WebSearch => &[ActionKind::WebSearch, ActionKind::ExpandKg],
        ActionKind::Verdict => &[ActionKind::Verdict],
    };
    preference.iter().copied().find(|k| legal.contains(k))
}

/// The action a sufficiency assessment points to.
pub fn hinted_action(hint: Sufficiency) -> ActionKind {
    match hint {
        Sufficiency::Sufficient => ActionKind::Verdict,
        Sufficiency::NeedKg | Sufficiency::Unknown => ActionKind::ExpandKg,
        Sufficiency::NeedWeb => ActionKind::WebSearch,
    }
}

/// An unusable assessment means: one more hop while hops remain, else the
/// web.
pub fn resolve_hint(hint: Sufficiency, can_expand: bool) -> Sufficiency {
    match hint {
        Sufficiency::Unknown if can_expand => Sufficiency::NeedKg,
        Sufficiency::Unknown => Sufficiency::NeedWeb,
        other => other,
    }
}

/// Asks the policy for the next action. One structured call is always made;
/// an illegal or unreadable answer is coerced to a legal action and the
/// coercion is recorded as a warning.
#[allow(clippy::too_many_arguments)]
pub fn select_action(
    claim: &str,
    history: &[Step],
    evidence: &EpisodeEvidence,
    hint: Sufficiency,
    legal: &[ActionKind],
    policy: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> Result<Selection, LlmError> {
    let schema = Schema::new()
        .required("action", FieldKind::Text { non_empty: true })
        .optional("reason", FieldKind::Text { non_empty: false });
    let legal_names = legal.iter().map(|k| k.prompt_name()).collect::<Vec<_>>().join(", ");
    let request = LlmRequest::new(prompts::SELECT_ACTION)
        .bind("claim", claim)
        .bind(
            "evidence_summary",
            summarize(&evidence.subgraph, &evidence.web_evidence),
        )
        .bind("history", render_history(history))
        .bind("sufficiency", hint.as_str())
        .bind("legal_actions", legal_names);
    let (requested, reason) = match gateway.complete_structured(policy, &request, &schema, CallPurpose::ActionSelection)
    {
        Ok(resp) => {
            let parsed = resp.parsed.unwrap_or_default();
            let text = parsed["action"].as_str().unwrap_or("");
            let reason = parsed.get("reason").and_then(Value::as_str).unwrap_or("").to_string();
            match ActionKind::parse(text) {
                Some(kind) => (kind, reason),
                None => {
                    let kind = hinted_action(hint);
                    gateway.warn(alloc::format!(
                        "unknown action \"{text}\"; following the assessment ({})",
                        kind.prompt_name()
                    ));
                    (kind, reason)
                }
            }
        }
        Err(LlmError::ParseFailure { .. }) => {
            let kind = hinted_action(hint);
            gateway.warn(alloc::format!(
                "action selection unreadable; following the assessment ({})",
                kind.prompt_name()
            ));
            (kind, String::new())
        }
        Err(e) => return Err(e),
    };
    match coerce(requested, legal) {
        Some(kind) => {
            let mut action = Action::new(kind);
            action.reason = reason;
            if kind != requested {
                gateway.warn(alloc::format!(
                    "illegal action {} coerced to {}",
                    requested.prompt_name(),
                    kind.prompt_name()
                ));
                action.reason = alloc::format!("coerced from {}", requested.prompt_name());
            }
            Ok(Selection::Take(action))
        }
        None => Ok(Selection::Exhausted { requested }),
    }
}

/// Judges whether the evidence settles the claim. Without any evidence the
/// answer is `need_web` and no call is made; an unreadable reply is
/// `unknown`.
pub fn assess_sufficiency(
    claim: &str,
    subgraph: &KnowledgeSubgraph,
    web: &[FilteredEvidence],
    policy: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> Result<Sufficiency, LlmError> {
    if subgraph.triplet_count() == 0 && subgraph.annotation_count() == 0 && web.is_empty() {
        return Ok(Sufficiency::NeedWeb);
    }
    let schema = Schema::new()
        .required(
            "assessment",
            FieldKind::Enum(alloc::vec!["sufficient", "need_kg", "need_web"]),
        )
        .optional("missing", FieldKind::Text { non_empty: false });
    let request = LlmRequest::new(prompts::ASSESS_SUFFICIENCY)
        .bind("claim", claim)
        .bind("evidence", render_evidence(subgraph, web));
    match gateway.complete_structured(policy, &request, &schema, CallPurpose::Sufficiency) {
        Ok(resp) => Ok(match resp.parsed.unwrap_or_default()["assessment"].as_str() {
            Some("sufficient") => Sufficiency::Sufficient,
            Some("need_kg") => Sufficiency::NeedKg,
            Some("need_web") => Sufficiency::NeedWeb,
            _ => Sufficiency::Unknown,
        }),
        Err(LlmError::ParseFailure { .. }) => {
            gateway.warn("sufficiency assessment unreadable");
            Ok(Sufficiency::Unknown)
        }
        Err(e) => Err(e),
    }
}

/// Maps a free-form label onto the binary scale. Anything that is not
/// clearly supported (mixed, partly true, unverifiable, ...) is refuted;
/// the flag reports whether the label was one of the two canonical forms.
pub fn normalize_verdict_label(text: &str) -> (Label, bool) {
    let key: String = text
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    match key.as_str() {
        "supported" | "supports" | "support" | "true" | "correct" => (Label::Supported, true),
        "refuted" | "refutes" | "refute" | "false" | "incorrect" => (Label::Refuted, true),
        _ => (Label::Refuted, false),
    }
}

fn verdict_schema() -> Schema {
    Schema::new()
        .required("label", FieldKind::Text { non_empty: true })
        .required("justification", FieldKind::Text { non_empty: true })
        .optional("citations", FieldKind::Array(Box::new(FieldKind::Any)))
}

fn read_verdict(
    parsed: &Map<String, Value>,
    evidence: &EpisodeEvidence,
    gateway: &mut Gateway<'_>,
) -> (Label, String, Vec<String>) {
    let raw = parsed["label"].as_str().unwrap_or("");
    let (label, canonical) = normalize_verdict_label(raw);
    if !canonical {
        gateway.warn(alloc::format!("verdict label \"{raw}\" standardized to {label}"));
    }
    let justification = parsed["justification"].as_str().unwrap_or("").trim().to_string();
    let refs = evidence.references();
    let mut citations: Vec<String> = Vec::new();
    for c in parsed.get("citations").and_then(Value::as_array).into_iter().flatten() {
        let Some(c) = c.as_str().map(str::trim) else {
            gateway.warn("non-string citation dropped");
            continue;
        };
        let c = c.trim_start_matches('[').trim_end_matches(']');
        if !refs.contains(c) {
            gateway.warn(alloc::format!("citation {c} not in evidence; dropped"));
        } else if !citations.iter().any(|x| x == c) {
            citations.push(c.to_string());
        }
    }
    (label, justification, citations)
}

/// The policy's verdict over all gathered evidence. Citations that do not
/// resolve are dropped with a warning.
pub fn verdict(
    claim: &str,
    evidence: &EpisodeEvidence,
    policy: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> Result<VerdictResult, LlmError> {
    let request = LlmRequest::new(prompts::VERDICT)
        .bind("claim", claim)
        .bind("evidence", render_evidence(&evidence.subgraph, &evidence.web_evidence));
    let resp = gateway.complete_structured(policy, &request, &verdict_schema(), CallPurpose::Verdict)?;
    let (label, justification, citations) = read_verdict(&resp.parsed.unwrap_or_default(), evidence, gateway);
    Ok(VerdictResult {
        label,
        justification,
        citations,
        forced: false,
        forced_reason: None,
    })
}

/// A verdict compelled by the dedicated prompt. Never fails: if the call
/// cannot be completed the answer is Refuted for insufficient evidence.
pub fn force_verdict(
    claim: &str,
    evidence: &EpisodeEvidence,
    reason: ForcedReason,
    policy: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> VerdictResult {
    let request = LlmRequest::new(prompts::FORCED_VERDICT)
        .bind("claim", claim)
        .bind("evidence", render_evidence(&evidence.subgraph, &evidence.web_evidence));
    let (label, justification, citations) =
        match gateway.complete_structured(policy, &request, &verdict_schema(), CallPurpose::ForcedVerdict) {
            Ok(resp) => read_verdict(&resp.parsed.unwrap_or_default(), evidence, gateway),
            Err(e) => {
                gateway.warn(alloc::format!("forced verdict failed ({e}); using fallback"));
                (Label::Refuted, FALLBACK_JUSTIFICATION.to_string(), Vec::new())
            }
        };
    VerdictResult {
        label,
        justification,
        citations,
        forced: true,
        forced_reason: Some(reason),
    }
}
