//! The evidence listing shown to the LLM and the references it may cite.
//!
//! Every item gets a stable reference: `t:S|R|O` for triplets, `a:E#i` for
//! the i-th annotation on entity `E`, and `p:i` for the i-th filtered web
//! passage.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::kg::{KnowledgeSubgraph, Origin};
use crate::text::collapse_whitespace;
use crate::web::{FilteredEvidence, Stance};

/// Longest passage excerpt included in a listing.
pub const PASSAGE_EXCERPT_CHARS: usize = 400;

pub fn passage_reference(index: usize) -> String {
    alloc::format!("p:{index}")
}

/// One line per evidence item, triplets first, then annotations, then
/// passages. An empty listing renders as `(none)`.
pub fn render_evidence(subgraph: &KnowledgeSubgraph, web: &[FilteredEvidence]) -> String {
    let mut lines: Vec<String> = Vec::new();
    for t in subgraph.triplets() {
        let origin = match t.origin {
            Origin::Kg => String::from("kg"),
            Origin::Web => alloc::format!("web {:.2}", t.confidence),
        };
        lines.push(alloc::format!(
            "[{}] {} | {} | {} ({origin})",
            t.reference(),
            t.subject.label,
            t.relation.label,
            t.object.label
        ));
    }
    for (entity, notes) in subgraph.annotations() {
        for (i, note) in notes.iter().enumerate() {
            lines.push(alloc::format!("[a:{entity}#{i}] {note}"));
        }
    }
    for (i, item) in web.iter().enumerate() {
        let stance = match item.stance {
            Stance::Supports => "supports",
            Stance::Refutes => "refutes",
            Stance::Neutral => "neutral",
        };
        lines.push(alloc::format!(
            "[{}] ({stance}, {:.2}) {}: {}",
            passage_reference(i),
            item.consistency_confidence,
            item.passage.source_url,
            crate::text::truncate_chars(&collapse_whitespace(&item.passage.text), PASSAGE_EXCERPT_CHARS)
        ));
    }
    if lines.is_empty() {
        return String::from("(none)");
    }
    lines.join("\n")
}

/// Every reference a verdict may cite.
pub fn valid_references(subgraph: &KnowledgeSubgraph, web: &[FilteredEvidence]) -> BTreeSet<String> {
    let mut refs = subgraph.references();
    refs.extend((0..web.len()).map(passage_reference));
    refs
}

/// One-line summary used where the full listing would be too long.
pub fn summarize(subgraph: &KnowledgeSubgraph, web: &[FilteredEvidence]) -> String {
    alloc::format!(
        "{} triplets ({} from the web), {} annotations, {} web passages, {} entities",
        subgraph.triplet_count(),
        subgraph.triplets().filter(|t| t.origin == Origin::Web).count(),
        subgraph.annotation_count(),
        web.len(),
        subgraph.hops().len()
    )
}
