use crate::agent::{Label, Trajectory};

use super::types::{CompositeReward, RewardWeights};

/// Index of the last step any citation was introduced by, if any citation
/// exists. Citations no step claims are taken as present from the start.
fn last_cited_step(t: &Trajectory) -> Option<usize> {
    let v = t.verdict.as_ref()?;
    if v.citations.is_empty() {
        return None;
    }
    let mut last = 0;
    for c in &v.citations {
        if let Some(i) = t
            .steps
            .iter()
            .position(|s| s.observation.added_refs.iter().any(|r| r == c))
        {
            last = last.max(i);
        }
    }
    Some(last)
}

/// Retrieval actions that, in hindsight, contributed nothing cited: those
/// after the step that introduced the last cited item. Without citations
/// every retrieval after the initial one counts.
pub fn superfluous_actions(t: &Trajectory) -> usize {
    let from = match last_cited_step(t) {
        Some(i) => i + 1,
        None => 1,
    };
    t.steps
        .iter()
        .skip(from)
        .filter(|s| s.action.kind.is_retrieval())
        .count()
}

/// Correctness, citation sufficiency and an efficiency penalty, weighted.
pub fn compute_reward(t: &Trajectory, gold: Label, weights: &RewardWeights) -> CompositeReward {
    let correctness = if t.label() == Some(gold) { 1.0 } else { 0.0 };
    let refs = t.evidence.references();
    let sufficiency = match &t.verdict {
        Some(v) if !v.citations.is_empty() => {
            v.citations.iter().filter(|c| refs.contains(*c)).count() as f64 / v.citations.len() as f64
        }
        _ => 0.0,
    };
    let superfluous = superfluous_actions(t);
    let efficiency_penalty = -weights.per_superfluous_action * superfluous as f64;
    CompositeReward {
        correctness,
        sufficiency,
        efficiency_penalty,
        superfluous_actions: superfluous,
        total: weights.correctness * correctness + weights.sufficiency * sufficiency + efficiency_penalty,
    }
}
