//! Offline prompt improvement: self-critique of finished episodes, a
//! composite reward, and critique-driven rewrites of the trainable
//! templates, accepted only on validation improvement.

mod gradient;
mod reflect;
mod reward;
mod run;
mod types;

pub use gradient::{dominant_tag, templates_for, textual_gradient, Candidate, MAX_CRITIQUES_PER_UPDATE};
pub use reflect::{reflect, rule_critiques};
pub use reward::{compute_reward, superfluous_actions};
pub use run::{optimize, split, EpisodeRunner};
pub use types::{
    BatchScore, CompositeReward, Critique, CritiqueSource, CritiqueTag, EpochRecord, ExperienceRecord, LabeledClaim,
    OptimizationRun, OptimizeConfig, OptimizeError, RewardWeights,
};
