use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::types::{FilteredEvidence, WebTriplet};
use crate::kg::{KnowledgeSubgraph, Origin, Triplet};
use crate::text::{normalize_label, sha256_hex};

/// Synthetic id for a surface form that no knowledge-graph entity matches:
/// `W:` followed by the first 12 hex digits of the SHA-256 of the
/// normalized surface form.
pub fn web_entity_id(surface: &str) -> String {
    let digest = sha256_hex(normalize_label(surface).as_bytes());
    alloc::format!("W:{}", &digest[..12])
}

/// What happened to one web triplet during fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    /// The fact (or annotation) was already present.
    Skipped,
    /// Added under an existing knowledge-graph relation.
    Aligned,
    /// Recorded as a textual note on an entity already in the graph.
    Annotated,
    /// Added as a new web-origin triplet.
    Added,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationReport {
    pub dispositions: Vec<Disposition>,
    pub added_triplets: usize,
    pub added_annotations: usize,
}

impl IntegrationReport {
    pub fn count(&self, d: Disposition) -> usize {
        self.dispositions.iter().filter(|x| **x == d).count()
    }
}

fn annotation_text(t: &Triplet, confidence: f64, source: &str) -> String {
    alloc::format!(
        "{} {} {} (web, confidence {confidence:.2}, {source})",
        t.subject.label,
        t.relation.label,
        t.object.label
    )
}

/// Fuses web triplets into a copy of `subgraph`.
///
/// Knowledge-graph triplets are never touched. A web fact is skipped when
/// its identity already exists, mapped onto a knowledge-graph relation when
/// its label (or an alias) matches one, attached as an annotation when it
/// touches a known entity through an unknown relation, and added as a new
/// web triplet otherwise. Confidence comes from the evidence item the fact
/// was extracted from.
pub fn integrate(
    subgraph: &KnowledgeSubgraph,
    web_triplets: &[WebTriplet],
    evidence: &[FilteredEvidence],
) -> (KnowledgeSubgraph, IntegrationReport) {
    let mut g = subgraph.clone();
    let mut report = IntegrationReport::default();
    for wt in web_triplets {
        let confidence = evidence
            .get(wt.evidence_index)
            .map_or(wt.confidence, |e| e.consistency_confidence)
            .clamp(0.0, 1.0);
        let mut t = wt.triplet.clone();
        t.origin = Origin::Web;
        t.confidence = confidence;
        t.source = Some(wt.provenance.clone());
        let disposition = if g.contains(&t.key()) {
            Disposition::Skipped
        } else if let Some(rel) = kg_relation(&g, &t) {
            t.relation = rel;
            if g.insert(t) {
                report.added_triplets += 1;
                Disposition::Aligned
            } else {
                Disposition::Skipped
            }
        } else if let Some(anchor) = known_endpoint(&g, &t) {
            let note = annotation_text(&t, confidence, &wt.provenance);
            // The same note may already sit on the other endpoint when that
            // one became known later in an earlier pass.
            let seen = g.annotations().values().any(|notes| notes.contains(&note));
            if !seen && g.annotate(&anchor, note) {
                report.added_annotations += 1;
                Disposition::Annotated
            } else {
                Disposition::Skipped
            }
        } else if g.insert(t) {
            report.added_triplets += 1;
            Disposition::Added
        } else {
            Disposition::Skipped
        };
        report.dispositions.push(disposition);
    }
    (g, report)
}

fn known_endpoint(g: &KnowledgeSubgraph, t: &Triplet) -> Option<String> {
    [&t.subject.id, &t.object.id]
        .into_iter()
        .find(|id| g.contains_entity(id))
        .cloned()
}

/// The knowledge-graph relation a web triplet's relation maps onto, by id
/// or by normalized label/alias.
fn kg_relation(g: &KnowledgeSubgraph, t: &Triplet) -> Option<crate::kg::RelationId> {
    g.triplets()
        .find(|k| k.origin == Origin::Kg && k.relation.id == t.relation.id)
        .map(|k| k.relation.clone())
        .or_else(|| g.kg_relation_by_label(&t.relation.label))
}

#[cfg(test)]
mod tests;
