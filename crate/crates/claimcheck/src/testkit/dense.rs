//! Worst case for the retrieval cost model: a graph where every entity has
//! more relations and neighbours than the beam keeps, and a model that
//! never finds the evidence sufficient.

use claimcheck_core::kg::{Direction, Edge, EntityId, KgBackend, KgError, RelationId};
use claimcheck_core::llm::{Completion, Decoding, LlmBackend, LlmError};
use claimcheck_core::prompts;
use serde_json::json;

use super::oracle::{field, rows, task};

/// Procedural graph: every surface form links to its own entity and every
/// entity has `relations` outgoing relations with `fanout` fresh objects
/// each. Nothing points back, so every hop discovers only new entities.
#[derive(Debug, Clone, Copy)]
pub struct DenseGraph {
    pub relations: usize,
    pub fanout: usize,
}

impl Default for DenseGraph {
    fn default() -> Self {
        Self {
            relations: 6,
            fanout: 12,
        }
    }
}

impl KgBackend for DenseGraph {
    fn search_entities(&self, text: &str, limit: usize) -> Result<Vec<EntityId>, KgError> {
        let text = text.trim();
        if text.is_empty() || limit == 0 {
            return Ok(Vec::new());
        }
        Ok(vec![EntityId::new(
            format!("D:{}", text.to_lowercase().replace(' ', "_")),
            text,
        )])
    }

    fn edges(&self, entity: &EntityId, direction: Direction) -> Result<Vec<Edge>, KgError> {
        if direction == Direction::Incoming {
            return Ok(Vec::new());
        }
        let mut out = Vec::with_capacity(self.relations * self.fanout);
        for r in 0..self.relations {
            for j in 0..self.fanout {
                out.push(Edge {
                    relation: RelationId::new(format!("R{r}"), format!("relation {r}")),
                    other: EntityId::new(format!("{}/{r}.{j}", entity.id), format!("node {r}.{j}")),
                });
            }
        }
        Ok(out)
    }
}

/// A claim naming five linkable entities, one more than the default beam.
pub const DENSE_CLAIM: &str = "Alpha Node, Beta Node, Gamma Node, Delta Node and Epsilon Node are connected.";

/// Model that always wants more knowledge-graph evidence, then web
/// evidence, and gives a verdict only when forced to.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeverSufficientLlm;

impl LlmBackend for NeverSufficientLlm {
    fn complete(&self, prompt: &str, _decoding: &Decoding) -> Result<Completion, LlmError> {
        let reply = match task(prompt) {
            prompts::ASSESS_SUFFICIENCY => json!({"assessment": "need_kg", "missing": "everything"}),
            prompts::SELECT_ACTION => {
                let legal = field(prompt, "Legal actions");
                let action = if legal.contains("expandKg") {
                    "expandKg"
                } else {
                    "webSearch"
                };
                json!({"action": action, "reason": "more evidence"})
            }
            prompts::PRUNE_FRONTIER => json!({"scores": vec![1.0; rows(prompt, 'E').len()]}),
            prompts::PRUNE_RELATIONS => json!({"scores": vec![1.0; rows(prompt, 'C').len()]}),
            prompts::FORMULATE_QUERY => json!({"query": "connected nodes", "rationale": "coverage"}),
            prompts::FILTER_EVIDENCE => json!({"items": []}),
            prompts::EXTRACT_TRIPLETS => json!({"triplets": []}),
            _ => json!({"label": "Refuted", "justification": "nothing conclusive was found", "citations": []}),
        };
        Ok(Completion::text(reply.to_string()))
    }
}
