use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gradient::textual_gradient;
use super::reflect::{reflect, rule_critiques};
use super::reward::compute_reward;
use super::types::{
    BatchScore, EpochRecord, ExperienceRecord, LabeledClaim, OptimizationRun, OptimizeConfig, OptimizeError,
};
use crate::agent::{AgentError, Trajectory};
use crate::llm::{Gateway, LlmBackend, PromptPolicy};

/// Runs one episode for a claim under a given policy. The optimizer only
/// ever changes the policy it passes in.
pub trait EpisodeRunner {
    fn run(&self, claim: &str, policy: &PromptPolicy) -> Result<Trajectory, AgentError>;
}

impl<F> EpisodeRunner for F
where
    F: Fn(&str, &PromptPolicy) -> Result<Trajectory, AgentError>,
{
    fn run(&self, claim: &str, policy: &PromptPolicy) -> Result<Trajectory, AgentError> {
        self(claim, policy)
    }
}

/// Seeded split into disjoint train and validation sets. Input order does
/// not matter: claims are sorted by id before shuffling.
pub fn split(
    claims: &[LabeledClaim],
    config: &OptimizeConfig,
) -> Result<(Vec<LabeledClaim>, Vec<LabeledClaim>), OptimizeError> {
    let required = config.train_size + config.val_size;
    if claims.len() < required {
        return Err(OptimizeError::InsufficientData {
            available: claims.len(),
            required,
        });
    }
    let mut sorted = claims.to_vec();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = sorted.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(OptimizeError::DuplicateId(w[0].id.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    sorted.shuffle(&mut rng);
    let val = sorted[config.train_size..required].to_vec();
    sorted.truncate(config.train_size);
    Ok((sorted, val))
}

/// Episodes for every claim, scored. Failed episodes score zero reward.
fn play(
    claims: &[LabeledClaim],
    policy: &PromptPolicy,
    runner: &dyn EpisodeRunner,
    config: &OptimizeConfig,
) -> (BatchScore, Vec<Option<Trajectory>>) {
    let mut score = BatchScore::default();
    let mut total = 0.0;
    let mut correct = 0usize;
    let mut trajectories = Vec::with_capacity(claims.len());
    for c in claims {
        match runner.run(&c.claim, policy) {
            Ok(t) => {
                let r = compute_reward(&t, c.label, &config.weights);
                total += r.total;
                if r.correctness == 1.0 {
                    correct += 1;
                }
                for crit in rule_critiques(&t, c.label) {
                    *score.flags.entry(crit.tag).or_insert(0) += 1;
                }
                trajectories.push(Some(t));
            }
            Err(_) => {
                score.failed_episodes += 1;
                trajectories.push(None);
            }
        }
    }
    if !claims.is_empty() {
        score.mean_reward = total / claims.len() as f64;
        score.accuracy = correct as f64 / claims.len() as f64;
    }
    (score, trajectories)
}

fn experience(
    claim: &LabeledClaim,
    t: &Trajectory,
    config: &OptimizeConfig,
    policy: &PromptPolicy,
    gateway: &mut Gateway<'_>,
) -> Vec<ExperienceRecord> {
    let reward = compute_reward(t, claim.label, &config.weights).total;
    let mut critiques = reflect(t, claim.label, policy, gateway);
    let mut state = crate::kg::KnowledgeSubgraph::new().digest();
    let mut out = Vec::with_capacity(t.steps.len());
    for (i, s) in t.steps.iter().enumerate() {
        let (mine, rest): (Vec<_>, Vec<_>) = critiques.into_iter().partition(|c| c.step_index == i);
        critiques = rest;
        out.push(ExperienceRecord {
            claim_id: claim.id.clone(),
            step_index: i,
            state_digest: state.clone(),
            action: s.action.clone(),
            observation_digest: s.observation.snapshot.clone(),
            reward,
            critiques: mine,
        });
        state = s.observation.snapshot.clone();
    }
    out
}

/// Hill-climbing over prompt text. Each epoch plays the training claims
/// with the current policy, reflects on every episode, asks for one
/// revised candidate and keeps it only if its mean validation reward is
/// strictly higher. The LLM backends are never touched; only template text
/// and versions change.
pub fn optimize(
    initial: &PromptPolicy,
    claims: &[LabeledClaim],
    config: &OptimizeConfig,
    runner: &dyn EpisodeRunner,
    meta: &dyn LlmBackend,
) -> Result<OptimizationRun, OptimizeError> {
    let (train, val) = split(claims, config)?;
    let train_ids: BTreeSet<&str> = train.iter().map(|c| c.id.as_str()).collect();
    debug_assert!(val.iter().all(|c| !train_ids.contains(c.id.as_str())));

    let (initial_val, _) = play(&val, initial, runner, config);
    let mut current = initial.clone();
    let mut current_val = initial_val.clone();
    let mut history = Vec::new();
    for epoch in 1..=config.epochs {
        let (train_score, trajectories) = play(&train, &current, runner, config);
        let mut gateway = Gateway::new(meta);
        let mut records = Vec::new();
        for (c, t) in train.iter().zip(&trajectories) {
            if let Some(t) = t {
                records.extend(experience(c, t, config, &current, &mut gateway));
            }
        }
        let mut record = EpochRecord {
            epoch,
            train: train_score,
            candidate: None,
            revised_templates: Vec::new(),
            val: None,
            accepted: false,
            note: None,
        };
        match textual_gradient(&records, &current, &mut gateway) {
            Ok(candidate) if candidate.revised.is_empty() => {
                record.note = Some(String::from("no template changed"));
            }
            Ok(candidate) => {
                let (val_score, _) = play(&val, &candidate.policy, runner, config);
                record.candidate = Some(candidate.policy.digest());
                record.revised_templates = candidate.revised;
                record.accepted = val_score.mean_reward > current_val.mean_reward;
                if record.accepted {
                    current = candidate.policy;
                    current_val = val_score.clone();
                }
                record.val = Some(val_score);
            }
            Err(e) => record.note = Some(alloc::format!("epoch skipped: {e}")),
        }
        history.push(record);
    }
    Ok(OptimizationRun {
        config: *config,
        train_ids: train.iter().map(|c| c.id.clone()).collect(),
        val_ids: val.iter().map(|c| c.id.to_string()).collect(),
        initial_policy: initial.digest(),
        initial_val,
        history,
        selected_policy: current.digest(),
        selected_val: current_val,
        selected: current,
    })
}
