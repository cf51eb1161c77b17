use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::Value;

use super::types::{Critique, CritiqueSource, CritiqueTag};
use crate::agent::{ActionKind, Label, Sufficiency, Trajectory};
use crate::llm::{CallPurpose, FieldKind, Gateway, LlmRequest, PromptPolicy, Schema};
use crate::prompts;

fn rule(tag: CritiqueTag, step_index: usize, text: &str) -> Critique {
    Critique {
        tag,
        step_index,
        text: text.to_string(),
        source: CritiqueSource::Rule,
    }
}

/// Deterministic critiques derived from the action pattern alone.
///
/// - wrong, no `expandKg` at all: premature termination at the verdict;
/// - wrong, web search after the hop budget was used up: insufficient
///   coverage at that search;
/// - correct, retrieval after an assessment said `sufficient`: redundant
///   retrieval at that action.
pub fn rule_critiques(t: &Trajectory, gold: Label) -> Vec<Critique> {
    let mut out = Vec::new();
    let Some(last) = t.steps.len().checked_sub(1) else {
        return out;
    };
    let correct = t.label() == Some(gold);
    if !correct && t.count(ActionKind::ExpandKg) == 0 {
        out.push(rule(
            CritiqueTag::PrematureTermination,
            last,
            "the verdict was wrong and the graph was never expanded beyond the initial retrieval",
        ));
    }
    if !correct {
        let full = t.config.max_expansions() as usize;
        let mut expansions = 0;
        for (i, s) in t.steps.iter().enumerate() {
            match s.action.kind {
                ActionKind::ExpandKg => expansions += 1,
                ActionKind::WebSearch if full > 0 && expansions >= full => {
                    out.push(rule(
                        CritiqueTag::InsufficientCoverage,
                        i,
                        "web search was needed after the graph had been expanded to the hop limit",
                    ));
                    break;
                }
                _ => {}
            }
        }
    }
    if correct {
        let sufficient_at = t
            .steps
            .iter()
            .position(|s| s.observation.sufficiency_hint == Sufficiency::Sufficient);
        if let Some(i) = sufficient_at {
            if let Some(j) = (i + 1..t.steps.len()).find(|j| t.steps[*j].action.kind.is_retrieval()) {
                out.push(rule(
                    CritiqueTag::RedundantRetrieval,
                    j,
                    "retrieval continued after the evidence had been judged sufficient",
                ));
            }
        }
    }
    out
}

fn render_steps(t: &Trajectory) -> String {
    t.steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let o = &s.observation;
            let mut line = alloc::format!(
                "S{i} | {} | +{} triplets +{} annotations +{} passages | assessment {}",
                s.action.kind.prompt_name(),
                o.added_triplets,
                o.added_annotations,
                o.added_passages,
                o.sufficiency_hint.as_str()
            );
            if !s.action.reason.is_empty() {
                line.push_str(&alloc::format!(" | {}", s.action.reason));
            }
            line
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Self-critique of a finished episode: one reflection call plus the rule
/// critiques, which are appended whatever the call returns. If the call
/// fails only the rule critiques are returned.
pub fn reflect(t: &Trajectory, gold: Label, policy: &PromptPolicy, gateway: &mut Gateway<'_>) -> Vec<Critique> {
    let item = Schema::new()
        .required("tag", FieldKind::Text { non_empty: true })
        .optional("step", FieldKind::Integer)
        .optional("text", FieldKind::Text { non_empty: false });
    let schema = Schema::new().required(
        "critiques",
        FieldKind::Array(alloc::boxed::Box::new(FieldKind::Object(item))),
    );
    let predicted = t.label().map_or("none", Label::as_str);
    let request = LlmRequest::new(prompts::REFLECT)
        .bind("claim", t.claim.as_str())
        .bind("gold", gold.as_str())
        .bind("predicted", predicted)
        .bind("steps", render_steps(t));
    let mut out = Vec::new();
    match gateway.complete_structured(policy, &request, &schema, CallPurpose::Reflection) {
        Ok(resp) => {
            let parsed = resp.parsed.unwrap_or_default();
            let last = t.steps.len().saturating_sub(1);
            for c in parsed["critiques"].as_array().into_iter().flatten() {
                let step = c.get("step").and_then(Value::as_u64).map_or(last, |s| s as usize);
                if step > last {
                    gateway.warn(alloc::format!("critique step {step} out of range; dropped"));
                    continue;
                }
                out.push(Critique {
                    tag: CritiqueTag::parse(c["tag"].as_str().unwrap_or("")),
                    step_index: step,
                    text: c.get("text").and_then(Value::as_str).unwrap_or("").to_string(),
                    source: CritiqueSource::Reflection,
                });
            }
        }
        Err(e) => gateway.warn(alloc::format!("reflection failed ({e}); rule critiques only")),
    }
    out.extend(rule_critiques(t, gold));
    out
}
