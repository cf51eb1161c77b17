use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::agent::{ActionKind, ForcedReason, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorClass {
    InsufficientKG,
    ExceedMaxSteps,
    OverConfidence,
    Other,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 4] = [
        ErrorClass::InsufficientKG,
        ErrorClass::ExceedMaxSteps,
        ErrorClass::OverConfidence,
        ErrorClass::Other,
    ];
}

/// Failure flags of a wrong prediction; empty for correct ones. Classes can
/// co-occur; `Other` is reported only when no named class applies.
///
/// - `OverConfidence`: the initial retrieval was followed directly by an
///   unforced verdict;
/// - `ExceedMaxSteps`: the verdict was forced because the retrieval
///   allowance ran out;
/// - `InsufficientKG`: a web search happened after at least one graph
///   expansion.
pub fn classify_error(t: &Trajectory, correct: bool) -> Vec<ErrorClass> {
    if correct {
        return Vec::new();
    }
    let kinds: Vec<ActionKind> = t.actions().collect();
    let forced = t
        .verdict
        .as_ref()
        .and_then(|v| v.forced.then_some(v.forced_reason))
        .flatten();
    let mut flags = Vec::new();
    if let Some(first_expand) = kinds.iter().position(|k| *k == ActionKind::ExpandKg) {
        if kinds[first_expand..].contains(&ActionKind::WebSearch) {
            flags.push(ErrorClass::InsufficientKG);
        }
    }
    if matches!(forced, Some(ForcedReason::StepLimit | ForcedReason::RetrievalExhausted)) {
        flags.push(ErrorClass::ExceedMaxSteps);
    }
    if kinds == [ActionKind::InitKgRetrieval, ActionKind::Verdict] && forced.is_none() {
        flags.push(ErrorClass::OverConfidence);
    }
    if flags.is_empty() {
        flags.push(ErrorClass::Other);
    }
    flags
}
