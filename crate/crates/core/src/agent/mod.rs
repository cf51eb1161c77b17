//! The verification episode: an initial knowledge-graph retrieval, then
//! policy-chosen `expandKg` / `webSearch` actions until the policy commits
//! to a verdict or the step limit forces one.

mod decide;
mod episode;
mod types;

pub use decide::{
    assess_sufficiency, coerce, force_verdict, hinted_action, normalize_verdict_label, resolve_hint, select_action,
    verdict, Selection, FALLBACK_JUSTIFICATION,
};
pub use episode::{run_episode, Environment};
pub use types::{
    Action, ActionKind, AgentError, Counters, EpisodeConfig, EpisodeEvidence, ForcedReason, Label, Observation,
    ObservationKind, Step, Sufficiency, Trajectory, VerdictResult,
};
