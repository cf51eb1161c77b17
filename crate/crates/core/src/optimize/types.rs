use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Action, Label};
use crate::llm::{LlmError, PromptPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptimizeError {
    #[error("need at least {required} labeled claims, got {available}")]
    InsufficientData { available: usize, required: usize },
    #[error("duplicate claim id `{0}`")]
    DuplicateId(String),
    #[error("critique batch is empty")]
    EmptyBatch,
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CritiqueTag {
    InsufficientCoverage,
    PrematureTermination,
    RedundantRetrieval,
    ContradictionMishandled,
    Other,
}

impl CritiqueTag {
    pub const ALL: [CritiqueTag; 5] = [
        CritiqueTag::InsufficientCoverage,
        CritiqueTag::PrematureTermination,
        CritiqueTag::RedundantRetrieval,
        CritiqueTag::ContradictionMishandled,
        CritiqueTag::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CritiqueTag::InsufficientCoverage => "InsufficientCoverage",
            CritiqueTag::PrematureTermination => "PrematureTermination",
            CritiqueTag::RedundantRetrieval => "RedundantRetrieval",
            CritiqueTag::ContradictionMishandled => "ContradictionMishandled",
            CritiqueTag::Other => "Other",
        }
    }

    /// Lenient parse; anything unrecognized is `Other`.
    pub fn parse(text: &str) -> Self {
        let key: String = text
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Self::ALL
            .into_iter()
            .find(|t| t.as_str().to_ascii_lowercase() == key)
            .unwrap_or(CritiqueTag::Other)
    }
}

/// Where a critique came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CritiqueSource {
    Rule,
    Reflection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Critique {
    pub tag: CritiqueTag,
    pub step_index: usize,
    pub text: String,
    pub source: CritiqueSource,
}

/// One `(state, action, observation, reward, critique)` tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceRecord {
    pub claim_id: String,
    pub step_index: usize,
    /// Subgraph digest before the action.
    pub state_digest: String,
    pub action: Action,
    /// Subgraph digest after the action.
    pub observation_digest: String,
    /// Episode reward, shared by every step of the episode.
    pub reward: f64,
    pub critiques: Vec<Critique>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub correctness: f64,
    pub sufficiency: f64,
    /// Penalty per superfluous retrieval action.
    pub per_superfluous_action: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            correctness: 1.0,
            sufficiency: 0.25,
            per_superfluous_action: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeReward {
    pub correctness: f64,
    pub sufficiency: f64,
    pub efficiency_penalty: f64,
    pub superfluous_actions: usize,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledClaim {
    pub id: String,
    pub claim: String,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeConfig {
    pub epochs: u32,
    pub train_size: usize,
    pub val_size: usize,
    pub seed: u64,
    pub weights: RewardWeights,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            train_size: 100,
            val_size: 50,
            seed: 0,
            weights: RewardWeights::default(),
        }
    }
}

/// Aggregate over one batch of episodes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchScore {
    pub mean_reward: f64,
    pub accuracy: f64,
    /// Rule-based critique flags per tag.
    pub flags: BTreeMap<CritiqueTag, usize>,
    pub failed_episodes: usize,
}

impl BatchScore {
    pub fn flag(&self, tag: CritiqueTag) -> usize {
        self.flags.get(&tag).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub train: BatchScore,
    /// Digest of the candidate policy, absent when the epoch was skipped.
    pub candidate: Option<String>,
    pub revised_templates: Vec<String>,
    pub val: Option<BatchScore>,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRun {
    pub config: OptimizeConfig,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub initial_policy: String,
    pub initial_val: BatchScore,
    pub history: Vec<EpochRecord>,
    pub selected_policy: String,
    pub selected_val: BatchScore,
    pub selected: PromptPolicy,
}
