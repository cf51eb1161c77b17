use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{KgConfig, KnowledgeSubgraph, OBJECTS_PER_RELATION};
use crate::llm::CallPurpose;
use crate::web::{FilteredEvidence, WebConfig, WebQuery, WebTriplet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("claim is empty")]
    EmptyClaim,
}

/// Binary verdict label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Supported,
    Refuted,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Supported => "Supported",
            Label::Refuted => "Refuted",
        }
    }
}

impl core::fmt::Display for Label {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    InitKgRetrieval,
    ExpandKg,
    WebSearch,
    Verdict,
}

impl ActionKind {
    /// Name used in prompts and accepted from the policy.
    pub fn prompt_name(self) -> &'static str {
        match self {
            ActionKind::InitKgRetrieval => "initKg",
            ActionKind::ExpandKg => "expandKg",
            ActionKind::WebSearch => "webSearch",
            ActionKind::Verdict => "verdict",
        }
    }

    /// Lenient parse of a policy reply: case, spaces, dashes and
    /// underscores are ignored.
    pub fn parse(text: &str) -> Option<Self> {
        let key: String = text
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "initkg" | "initkgretrieval" | "init" => Some(ActionKind::InitKgRetrieval),
            "expandkg" | "expand" => Some(ActionKind::ExpandKg),
            "websearch" | "web" | "search" => Some(ActionKind::WebSearch),
            "verdict" | "answer" => Some(ActionKind::Verdict),
            _ => None,
        }
    }

    pub fn is_retrieval(self) -> bool {
        self != ActionKind::Verdict
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    /// The query actually issued, for web searches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<WebQuery>,
    /// Reason given by the policy, or why the action was coerced.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub reason: String,
}

impl Action {
    pub fn new(kind: ActionKind) -> Self {
        Self {
            kind,
            query: None,
            reason: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sufficiency {
    Sufficient,
    NeedKg,
    NeedWeb,
    Unknown,
}

impl Sufficiency {
    pub fn as_str(self) -> &'static str {
        match self {
            Sufficiency::Sufficient => "sufficient",
            Sufficiency::NeedKg => "need_kg",
            Sufficiency::NeedWeb => "need_web",
            Sufficiency::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObservationKind {
    SubgraphDelta,
    WebEvidence,
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub kind: ObservationKind,
    /// Digest of the subgraph after the action.
    pub snapshot: String,
    pub added_triplets: usize,
    pub added_annotations: usize,
    pub added_passages: usize,
    /// References of the items this step added.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub added_refs: Vec<String>,
    pub sufficiency_hint: Sufficiency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub action: Action,
    pub observation: Observation,
}

/// Why a verdict was compelled instead of chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForcedReason {
    StepLimit,
    RetrievalExhausted,
    VerdictParseFailure,
    Transport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictResult {
    pub label: Label,
    pub justification: String,
    pub citations: Vec<String>,
    pub forced: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_reason: Option<ForcedReason>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Every backend invocation, retries included.
    pub llm_calls: u64,
    /// Pruning calls plus one final verdict: the quantity bounded by
    /// `N + k * N + 1`.
    pub bounded_llm_calls: u64,
    pub sparql_queries: u64,
    pub web_searches: u64,
    pub retries: u64,
    pub by_purpose: BTreeMap<CallPurpose, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    /// Beam width.
    pub k: u32,
    /// Maximum hops.
    pub n_hops: u32,
    /// Hops run by the initial retrieval.
    pub n_init: u32,
    /// Retrieval actions allowed before a verdict is forced.
    pub max_steps: u32,
    pub max_web_searches: u32,
    pub web: WebConfig,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            k: 4,
            n_hops: 4,
            n_init: 1,
            max_steps: 6,
            max_web_searches: 2,
            web: WebConfig::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn kg(&self) -> KgConfig {
        KgConfig {
            k: self.k,
            n_hops: self.n_hops,
            n_init: self.n_init,
            objects_per_relation: OBJECTS_PER_RELATION,
        }
    }

    /// `expandKg` actions available after the initial retrieval.
    pub fn max_expansions(&self) -> u32 {
        self.n_hops.saturating_sub(self.n_init)
    }

    /// Upper bound on pruning calls plus the final verdict.
    pub fn bounded_call_bound(&self) -> u64 {
        u64::from(self.n_hops) + u64::from(self.k) * u64::from(self.n_hops) + 1
    }

    pub fn sparql_bound(&self) -> u64 {
        u64::from(self.k) * u64::from(self.n_hops)
    }
}

/// Everything the verdict could see at the end of the episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEvidence {
    pub subgraph: KnowledgeSubgraph,
    pub web_evidence: Vec<FilteredEvidence>,
    pub web_triplets: Vec<WebTriplet>,
}

impl EpisodeEvidence {
    pub fn references(&self) -> alloc::collections::BTreeSet<String> {
        crate::evidence::valid_references(&self.subgraph, &self.web_evidence)
    }
}

/// The full record of one episode: alternating actions and observations,
/// the verdict and the instrumented counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub claim: String,
    pub config: EpisodeConfig,
    pub steps: Vec<Step>,
    pub verdict: Option<VerdictResult>,
    pub counters: Counters,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub evidence: EpisodeEvidence,
}

impl Trajectory {
    pub fn actions(&self) -> impl Iterator<Item = ActionKind> + '_ {
        self.steps.iter().map(|s| s.action.kind)
    }

    pub fn count(&self, kind: ActionKind) -> usize {
        self.actions().filter(|k| *k == kind).count()
    }

    pub fn label(&self) -> Option<Label> {
        self.verdict.as_ref().map(|v| v.label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    /// Checks the structural rules every finished episode must satisfy and
    /// describes each violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let kinds: Vec<ActionKind> = self.actions().collect();
        let cfg = &self.config;
        if kinds.first() != Some(&ActionKind::InitKgRetrieval) {
            out.push(String::from("first action is not InitKgRetrieval"));
        }
        if self.count(ActionKind::InitKgRetrieval) != 1 {
            out.push(alloc::format!(
                "InitKgRetrieval occurs {} times",
                self.count(ActionKind::InitKgRetrieval)
            ));
        }
        let verdicts = self.count(ActionKind::Verdict);
        if verdicts != 1 || kinds.last() != Some(&ActionKind::Verdict) {
            out.push(alloc::format!("expected exactly one final verdict, found {verdicts}"));
        }
        if self.verdict.is_none() {
            out.push(String::from("verdict result missing"));
        }
        if kinds.len() > cfg.max_steps as usize + 1 {
            out.push(alloc::format!(
                "{} actions exceed max_steps + 1 = {}",
                kinds.len(),
                cfg.max_steps + 1
            ));
        }
        let first_kg = kinds
            .iter()
            .position(|k| matches!(k, ActionKind::InitKgRetrieval | ActionKind::ExpandKg));
        if let Some(web) = kinds.iter().position(|k| *k == ActionKind::WebSearch) {
            if first_kg.is_none_or(|kg| web < kg) {
                out.push(String::from("WebSearch precedes the first knowledge-graph retrieval"));
            }
        }
        if self.count(ActionKind::ExpandKg) > cfg.max_expansions() as usize {
            out.push(alloc::format!(
                "{} ExpandKg actions exceed N - N_init = {}",
                self.count(ActionKind::ExpandKg),
                cfg.max_expansions()
            ));
        }
        if self.count(ActionKind::WebSearch) > cfg.max_web_searches as usize {
            out.push(alloc::format!(
                "{} WebSearch actions exceed {}",
                self.count(ActionKind::WebSearch),
                cfg.max_web_searches
            ));
        }
        if let Some(v) = &self.verdict {
            if v.justification.trim().is_empty() {
                out.push(String::from("empty justification"));
            }
            let refs = self.evidence.references();
            for c in &v.citations {
                if !refs.contains(c) {
                    out.push(alloc::format!("citation {c} is not in the episode evidence"));
                }
            }
        }
        let c = &self.counters;
        let first_attempts: u64 = c.by_purpose.values().sum();
        if first_attempts + c.retries != c.llm_calls {
            out.push(alloc::format!(
                "llm_calls {} != first attempts {} + retries {}",
                c.llm_calls,
                first_attempts,
                c.retries
            ));
        }
        if c.web_searches > self.count(ActionKind::WebSearch) as u64 {
            out.push(String::from("more provider searches than WebSearch actions"));
        }
        out
    }
}
