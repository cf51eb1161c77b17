use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::decide::{assess_sufficiency, force_verdict, resolve_hint, select_action, verdict, Selection};
use super::types::{
    Action, ActionKind, AgentError, Counters, EpisodeConfig, EpisodeEvidence, ForcedReason, Observation,
    ObservationKind, Step, Sufficiency, Trajectory, VerdictResult,
};
use crate::kg::{expand_kg, init_kg_retrieval, KgBackend, KgContext, KgError, KgState};
use crate::llm::{CallMeter, CallPurpose, Gateway, LlmError, PromptPolicy};
use crate::web::{
    filter_evidence, formulate_query, integrate, rank_passages, search, to_triplets, SearchProvider, WebError,
};

/// External services an episode reads from.
#[derive(Clone, Copy)]
pub struct Environment<'a> {
    pub kg: &'a dyn KgBackend,
    pub web: &'a dyn SearchProvider,
}

/// Whether an error ends the episode (services unreachable, broken
/// configuration) or only spoils the current step.
fn llm_fatal(e: &LlmError) -> bool {
    !matches!(e, LlmError::ParseFailure { .. } | LlmError::SchemaViolation(_))
}

fn kg_fatal(e: &KgError) -> bool {
    match e {
        KgError::Llm(inner) => llm_fatal(inner),
        KgError::Transport(_) | KgError::QueryTimeout => true,
        _ => false,
    }
}

fn web_fatal(e: &WebError) -> bool {
    match e {
        WebError::Llm(inner) => llm_fatal(inner),
        WebError::Kg(inner) => kg_fatal(inner),
        WebError::Transport(_) => true,
        _ => false,
    }
}

struct Episode<'a, 'g> {
    claim: &'a str,
    config: EpisodeConfig,
    policy: &'a PromptPolicy,
    env: Environment<'a>,
    gateway: &'a mut Gateway<'g>,
    kg: KgState,
    evidence: EpisodeEvidence,
    steps: Vec<Step>,
    web_searches: u64,
    hint: Sufficiency,
}

/// Result of executing one retrieval action.
enum Executed {
    Observed(Observation),
    Fatal(Observation),
}

impl Episode<'_, '_> {
    fn can_expand(&self) -> bool {
        (self.count(ActionKind::ExpandKg) as u32) < self.config.max_expansions() && self.kg.budget.hops_remaining() > 0
    }

    fn can_search(&self) -> bool {
        (self.count(ActionKind::WebSearch) as u32) < self.config.max_web_searches
    }

    fn count(&self, kind: ActionKind) -> usize {
        self.steps.iter().filter(|s| s.action.kind == kind).count()
    }

    fn legal(&self) -> Vec<ActionKind> {
        let mut legal = Vec::new();
        if self.can_expand() {
            legal.push(ActionKind::ExpandKg);
        }
        if self.can_search() {
            legal.push(ActionKind::WebSearch);
        }
        legal.push(ActionKind::Verdict);
        legal
    }

    fn observation(&self, kind: ObservationKind, before: &EpisodeEvidence) -> Observation {
        let after = &self.evidence;
        let old_refs = before.references();
        Observation {
            kind,
            snapshot: after.subgraph.digest(),
            added_triplets: after.subgraph.triplet_count() - before.subgraph.triplet_count(),
            added_annotations: after.subgraph.annotation_count() - before.subgraph.annotation_count(),
            added_passages: after.web_evidence.len() - before.web_evidence.len(),
            added_refs: after
                .references()
                .into_iter()
                .filter(|r| !old_refs.contains(r))
                .collect(),
            sufficiency_hint: Sufficiency::Unknown,
            note: None,
        }
    }

    fn sync_subgraph(&mut self) {
        self.evidence.subgraph = self.kg.subgraph.clone();
    }

    fn run_kg(&mut self, kind: ActionKind) -> Executed {
        let before = self.evidence.clone();
        let ctx = KgContext {
            backend: self.env.kg,
            policy: self.policy,
            config: self.config.kg(),
        };
        let result = if kind == ActionKind::InitKgRetrieval {
            init_kg_retrieval(self.claim, &ctx, self.gateway).map(|(state, _)| {
                self.kg = state;
            })
        } else {
            expand_kg(&mut self.kg, self.claim, &ctx, self.gateway).map(|_| ())
        };
        self.sync_subgraph();
        let mut obs = self.observation(ObservationKind::SubgraphDelta, &before);
        match result {
            Ok(()) => {
                if kind == ActionKind::InitKgRetrieval && self.kg.subgraph.topic_entities().next().is_none() {
                    obs.note = Some(String::from("no claim entity could be linked"));
                }
                Executed::Observed(obs)
            }
            Err(e) if kg_fatal(&e) => {
                obs.kind = ObservationKind::Terminal;
                obs.note = Some(e.to_string());
                Executed::Fatal(obs)
            }
            Err(e) => {
                self.gateway
                    .warn(alloc::format!("{} incomplete: {e}", kind.prompt_name()));
                obs.note = Some(e.to_string());
                Executed::Observed(obs)
            }
        }
    }

    fn run_web(&mut self, action: &mut Action) -> Executed {
        let before = self.evidence.clone();
        let result = self.web_pipeline(action);
        let mut obs = self.observation(ObservationKind::WebEvidence, &before);
        match result {
            Ok(note) => {
                obs.note = note;
                Executed::Observed(obs)
            }
            Err(e) if web_fatal(&e) => {
                obs.kind = ObservationKind::Terminal;
                obs.note = Some(e.to_string());
                Executed::Fatal(obs)
            }
            Err(e) => {
                self.gateway.warn(alloc::format!("webSearch incomplete: {e}"));
                obs.note = Some(e.to_string());
                Executed::Observed(obs)
            }
        }
    }

    /// Query → search → BM25 → LLM filter → triplets → fusion. Returns a
    /// note when the step ended early without an error.
    fn web_pipeline(&mut self, action: &mut Action) -> Result<Option<String>, WebError> {
        let cfg = self.config.web;
        let query = formulate_query(
            self.claim,
            &self.evidence.subgraph,
            &self.evidence.web_evidence,
            self.policy,
            self.gateway,
        )?;
        action.query = Some(query.clone());
        self.web_searches += 1;
        let docs = search(&query, cfg.documents.max(1), self.env.web)?;
        if docs.is_empty() {
            return Ok(Some(String::from("no search results")));
        }
        let mut passages = rank_passages(&query, &docs);
        passages.truncate(cfg.fine_candidates);
        if passages.is_empty() {
            return Ok(Some(String::from("no usable passages")));
        }
        let kept = filter_evidence(self.claim, &passages, cfg.threshold, self.policy, self.gateway)?;
        if kept.is_empty() {
            return Ok(Some(String::from("no passage passed the consistency filter")));
        }
        let offset = self.evidence.web_evidence.len();
        self.evidence.web_evidence.extend(kept.iter().cloned());
        let triplets = match to_triplets(self.claim, &kept, self.env.kg, self.policy, self.gateway) {
            Ok(t) => t,
            Err(WebError::AllItemsFailed) => {
                self.gateway.warn("no triplet extracted from the web evidence");
                return Ok(Some(String::from("passages kept without triplets")));
            }
            Err(e) => return Err(e),
        };
        let (fused, report) = integrate(&self.kg.subgraph, &triplets, &kept);
        self.kg.subgraph = fused;
        self.sync_subgraph();
        self.evidence
            .web_triplets
            .extend(triplets.into_iter().zip(report.dispositions).map(|(mut t, d)| {
                t.evidence_index += offset;
                t.schema_aligned = d == crate::web::Disposition::Aligned;
                t
            }));
        Ok(None)
    }

    fn assess(&mut self, obs: &mut Observation) -> Result<(), LlmError> {
        let hint = assess_sufficiency(
            self.claim,
            &self.evidence.subgraph,
            &self.evidence.web_evidence,
            self.policy,
            self.gateway,
        )?;
        obs.sufficiency_hint = hint;
        self.hint = resolve_hint(hint, self.can_expand());
        Ok(())
    }

    fn record(&mut self, action: Action, observation: Observation) {
        self.steps.push(Step { action, observation });
    }

    fn finish_forced(&mut self, reason: ForcedReason) -> VerdictResult {
        let v = force_verdict(self.claim, &self.evidence, reason, self.policy, self.gateway);
        self.record_verdict(&v);
        v
    }

    fn record_verdict(&mut self, v: &VerdictResult) {
        let mut action = Action::new(ActionKind::Verdict);
        if let Some(reason) = v.forced_reason {
            action.reason = alloc::format!("forced: {reason:?}");
        }
        let before = self.evidence.clone();
        let obs = self.observation(ObservationKind::Terminal, &before);
        self.record(action, obs);
    }

    /// Executes one retrieval action, assesses the result and records the
    /// step. Returns the forced verdict if the episode cannot continue.
    fn retrieve(&mut self, mut action: Action) -> Option<VerdictResult> {
        let executed = match action.kind {
            ActionKind::InitKgRetrieval | ActionKind::ExpandKg => self.run_kg(action.kind),
            ActionKind::WebSearch => self.run_web(&mut action),
            ActionKind::Verdict => unreachable!("verdict is not a retrieval action"),
        };
        match executed {
            Executed::Observed(mut obs) => {
                let assessed = self.assess(&mut obs);
                self.record(action, obs);
                match assessed {
                    Ok(()) => None,
                    Err(e) => Some(self.fail(e.to_string())),
                }
            }
            Executed::Fatal(obs) => {
                self.record(action, obs);
                Some(self.finish_forced(ForcedReason::Transport))
            }
        }
    }

    /// Records an unrecoverable error on the last step and forces a verdict.
    fn fail(&mut self, message: String) -> VerdictResult {
        self.gateway.warn(alloc::format!("episode aborted: {message}"));
        if let Some(last) = self.steps.last_mut() {
            last.observation.kind = ObservationKind::Terminal;
            last.observation.note = Some(message);
        }
        self.finish_forced(ForcedReason::Transport)
    }

    fn run(&mut self) -> VerdictResult {
        if let Some(v) = self.retrieve(Action::new(ActionKind::InitKgRetrieval)) {
            return v;
        }
        loop {
            let retrievals = self.steps.len() as u32;
            if retrievals >= self.config.max_steps {
                return self.finish_forced(ForcedReason::StepLimit);
            }
            let legal = self.legal();
            let selection = select_action(
                self.claim,
                &self.steps,
                &self.evidence,
                self.hint,
                &legal,
                self.policy,
                self.gateway,
            );
            let action = match selection {
                Ok(Selection::Take(a)) => a,
                Ok(Selection::Exhausted { requested }) => {
                    self.gateway.warn(alloc::format!(
                        "{} requested with no retrieval budget left",
                        requested.prompt_name()
                    ));
                    return self.finish_forced(ForcedReason::RetrievalExhausted);
                }
                Err(e) => return self.fail(e.to_string()),
            };
            if action.kind == ActionKind::Verdict {
                let v = match verdict(self.claim, &self.evidence, self.policy, self.gateway) {
                    Ok(v) => v,
                    Err(LlmError::ParseFailure { .. }) => {
                        self.gateway.warn("verdict unreadable; forcing");
                        force_verdict(
                            self.claim,
                            &self.evidence,
                            ForcedReason::VerdictParseFailure,
                            self.policy,
                            self.gateway,
                        )
                    }
                    Err(e) => {
                        self.gateway.warn(alloc::format!("verdict failed: {e}"));
                        force_verdict(
                            self.claim,
                            &self.evidence,
                            ForcedReason::Transport,
                            self.policy,
                            self.gateway,
                        )
                    }
                };
                let before = self.evidence.clone();
                let obs = self.observation(ObservationKind::Terminal, &before);
                self.record(action, obs);
                return v;
            }
            if let Some(v) = self.retrieve(action) {
                return v;
            }
        }
    }
}

fn counters(before: &CallMeter, after: &CallMeter, sparql: u32, web_searches: u64) -> Counters {
    let by_purpose = after
        .by_purpose
        .iter()
        .map(|(p, n)| (*p, n - before.count(*p)))
        .filter(|(_, n)| *n > 0)
        .collect::<alloc::collections::BTreeMap<_, _>>();
    let get = |p: CallPurpose| by_purpose.get(&p).copied().unwrap_or(0);
    let verdicts = get(CallPurpose::Verdict) + get(CallPurpose::ForcedVerdict);
    Counters {
        llm_calls: after.total - before.total,
        bounded_llm_calls: get(CallPurpose::FrontierPruning) + get(CallPurpose::RelationPruning) + verdicts.min(1),
        sparql_queries: u64::from(sparql),
        web_searches,
        retries: after.retries - before.retries,
        by_purpose,
    }
}

/// Runs one verification episode: initial retrieval, then policy-chosen
/// actions until a verdict or the step limit.
///
/// Only an empty claim is an error. Service failures end the episode early
/// with a `Terminal` observation and a forced verdict over the evidence
/// gathered so far.
pub fn run_episode(
    claim: &str,
    policy: &PromptPolicy,
    config: &EpisodeConfig,
    env: Environment<'_>,
    gateway: &mut Gateway<'_>,
) -> Result<(VerdictResult, Trajectory), AgentError> {
    let claim = claim.trim();
    if claim.is_empty() {
        return Err(AgentError::EmptyClaim);
    }
    let meter_before = gateway.meter().clone();
    let warnings_before = gateway.warnings().len();
    let mut episode = Episode {
        claim,
        config: *config,
        policy,
        env,
        gateway,
        kg: KgState::new(&config.kg()),
        evidence: EpisodeEvidence::default(),
        steps: Vec::new(),
        web_searches: 0,
        hint: Sufficiency::Unknown,
    };
    let verdict = episode.run();
    let Episode {
        steps,
        evidence,
        kg,
        web_searches,
        gateway,
        ..
    } = episode;
    let trajectory = Trajectory {
        claim: claim.to_string(),
        config: *config,
        steps,
        verdict: Some(verdict.clone()),
        counters: counters(
            &meter_before,
            gateway.meter(),
            kg.budget.sparql_queries_used,
            web_searches,
        ),
        warnings: gateway.warnings()[warnings_before..].to_vec(),
        evidence,
    };
    Ok((verdict, trajectory))
}
