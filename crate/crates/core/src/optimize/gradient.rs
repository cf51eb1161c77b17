use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::types::{CritiqueTag, ExperienceRecord, OptimizeError};
use crate::llm::{CallPurpose, FieldKind, Gateway, LlmRequest, PromptPolicy, Schema};
use crate::prompts;

/// Critique lines included in one update request.
pub const MAX_CRITIQUES_PER_UPDATE: usize = 24;

/// Templates a critique tag implicates.
pub fn templates_for(tag: CritiqueTag) -> &'static [&'static str] {
    match tag {
        CritiqueTag::ContradictionMishandled => &[prompts::VERDICT],
        _ => &[prompts::SELECT_ACTION, prompts::ASSESS_SUFFICIENCY],
    }
}

/// Most frequent tag in the batch; ties go to the earlier tag.
pub fn dominant_tag(records: &[ExperienceRecord]) -> Option<CritiqueTag> {
    let mut counts: BTreeMap<CritiqueTag, usize> = BTreeMap::new();
    for c in records.iter().flat_map(|r| &r.critiques) {
        *counts.entry(c.tag).or_insert(0) += 1;
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|(_, n)| *n == best).map(|(t, _)| t)
}

/// Proposed revision of `current`, plus the ids of the templates whose
/// text changed.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub policy: PromptPolicy,
    pub revised: Vec<String>,
}

/// One meta-call turning the batch's critiques into revised template text.
/// Only templates implicated by the dominant tag may change; a revision
/// that drops or adds placeholders is rejected.
pub fn textual_gradient(
    records: &[ExperienceRecord],
    current: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> Result<Candidate, OptimizeError> {
    let Some(tag) = dominant_tag(records) else {
        return Err(OptimizeError::EmptyBatch);
    };
    let targets = templates_for(tag);
    // Critiques of the dominant tag first, each distinct text once.
    let mut seen = BTreeSet::new();
    let mut lines: Vec<String> = Vec::new();
    let ordered = records
        .iter()
        .flat_map(|r| r.critiques.iter().map(move |c| (r, c)))
        .filter(|(_, c)| c.tag == tag)
        .chain(
            records
                .iter()
                .flat_map(|r| r.critiques.iter().map(move |c| (r, c)))
                .filter(|(_, c)| c.tag != tag),
        );
    for (r, c) in ordered {
        if lines.len() == MAX_CRITIQUES_PER_UPDATE {
            break;
        }
        let line = alloc::format!(
            "- [{}] {} (action {})",
            c.tag.as_str(),
            c.text,
            r.action.kind.prompt_name()
        );
        if seen.insert(line.clone()) {
            lines.push(line);
        }
    }
    let templates = targets
        .iter()
        .filter_map(|id| current.get(id))
        .map(|t| alloc::format!("<<< {} (version {})\n{}\n>>>", t.id, t.version, t.text))
        .collect::<Vec<_>>()
        .join("\n");
    let item = Schema::new()
        .required("template", FieldKind::Text { non_empty: true })
        .required("text", FieldKind::Text { non_empty: true });
    let schema = Schema::new().required(
        "revisions",
        FieldKind::Array(alloc::boxed::Box::new(FieldKind::Object(item))),
    );
    let request = LlmRequest::new(prompts::TEXTUAL_GRADIENT)
        .bind("critiques", lines.join("\n"))
        .bind("templates", templates);
    let parsed = gateway
        .complete_structured(current, &request, &schema, CallPurpose::TextualGradient)?
        .parsed
        .unwrap_or_default();
    let mut policy = current.clone();
    let mut revised = Vec::new();
    for r in parsed["revisions"].as_array().into_iter().flatten() {
        let id = r["template"].as_str().unwrap_or("").trim();
        let text = r["text"].as_str().unwrap_or("").to_string();
        if !targets.contains(&id) {
            gateway.warn(alloc::format!(
                "revision of {id} ignored: not implicated by {}",
                tag.as_str()
            ));
            continue;
        }
        let Some(old) = current.get(id) else { continue };
        let same_slots = match (
            old.placeholders(),
            crate::llm::PromptTemplate::new(id, text.as_str(), old.expected_output).placeholders(),
        ) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        };
        if !same_slots {
            gateway.warn(alloc::format!("revision of {id} rejected: placeholders changed"));
            continue;
        }
        if policy.revise(id, text) && !revised.iter().any(|x| x == id) {
            revised.push(id.to_string());
        }
    }
    Ok(Candidate { policy, revised })
}
