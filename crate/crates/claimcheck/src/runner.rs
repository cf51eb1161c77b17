//! Wiring: builds backends from an [`AppConfig`] and runs episodes,
//! benchmarks and optimizations over them.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use anyhow::{Context, Result};
use claimcheck_core::agent::AgentError;
use claimcheck_core::eval::{run_benchmark, DatasetRecord, EvalError, EvalReport, RecordOutcome};
use claimcheck_core::kg::FixtureGraph;
use claimcheck_core::llm::{Completion, Decoding, LlmError};
use claimcheck_core::prompts::default_policy;
use claimcheck_core::web::{FixtureSearch, WebDocument, WebError};
use claimcheck_core::{
    run_episode, Environment, EpisodeConfig, Gateway, KgBackend, LlmBackend, PromptPolicy, SearchProvider, Trajectory,
};

use crate::cassette::{load_script, RecordingBackend, ReplayBackend};
use crate::config::{AppConfig, BackendKind};
use crate::http::{ChatBackend, SerperSearch, WikidataBackend};

pub type SharedLlm = Arc<dyn LlmBackend + Send + Sync>;
pub type SharedKg = Arc<dyn KgBackend + Send + Sync>;
pub type SharedWeb = Arc<dyn SearchProvider + Send + Sync>;

/// The three services an episode talks to, shareable across threads.
#[derive(Clone)]
pub struct Services {
    pub llm: SharedLlm,
    pub kg: SharedKg,
    pub web: SharedWeb,
    pub decoding: Decoding,
    recorder: Option<(PathBuf, Arc<RecordingBackend<ChatBackend>>)>,
}

struct ArcBackend<B>(Arc<B>);

impl<B: LlmBackend> LlmBackend for ArcBackend<B> {
    fn complete(&self, prompt: &str, decoding: &Decoding) -> Result<Completion, LlmError> {
        self.0.complete(prompt, decoding)
    }
}

impl Services {
    pub fn new(llm: SharedLlm, kg: SharedKg, web: SharedWeb) -> Self {
        Self {
            llm,
            kg,
            web,
            decoding: Decoding::default(),
            recorder: None,
        }
    }

    pub fn from_config(config: &AppConfig) -> Result<Self> {
        config.validate()?;
        let mut recorder = None;
        let llm: SharedLlm = match config.llm.backend {
            BackendKind::Live => {
                let chat = ChatBackend::new(config.chat_settings())?;
                match &config.llm.record {
                    Some(path) => {
                        let rec = Arc::new(RecordingBackend::new(chat));
                        recorder = Some((path.clone(), rec.clone()));
                        Arc::new(ArcBackend(rec))
                    }
                    None => Arc::new(chat),
                }
            }
            BackendKind::Scripted => {
                let path = config.llm.cassette.as_ref().expect("validated");
                Arc::new(load_script(path).with_context(|| format!("loading script {}", path.display()))?)
            }
            BackendKind::Replay => {
                let path = config.llm.cassette.as_ref().expect("validated");
                Arc::new(ReplayBackend::load(path).with_context(|| format!("loading cassette {}", path.display()))?)
            }
        };
        let kg: SharedKg = match &config.kg.fixture {
            Some(path) => Arc::new(load_graph(path)?),
            None => Arc::new(WikidataBackend::new(config.wikidata_settings())?),
        };
        let web: SharedWeb = match &config.web.fixture {
            Some(path) => Arc::new(load_search(path)?),
            None => Arc::new(SerperSearch::new(config.serper_settings())?),
        };
        Ok(Self {
            llm,
            kg,
            web,
            decoding: Decoding {
                temperature: config.llm.temperature,
                max_output_tokens: config.llm.max_output_tokens,
            },
            recorder,
        })
    }

    /// Writes the recorded cassette, if this is a recording live run.
    pub fn finish(&self) -> Result<()> {
        if let Some((path, rec)) = &self.recorder {
            rec.save(path)
                .with_context(|| format!("writing cassette {}", path.display()))?;
        }
        Ok(())
    }

    pub fn environment(&self) -> Environment<'_> {
        Environment {
            kg: &*self.kg,
            web: &*self.web,
        }
    }

    /// One episode with a fresh gateway.
    pub fn run_claim(
        &self,
        claim: &str,
        policy: &PromptPolicy,
        config: &EpisodeConfig,
    ) -> Result<Trajectory, AgentError> {
        self.run_claim_with(claim, policy, config, &*self.web)
    }

    fn run_claim_with(
        &self,
        claim: &str,
        policy: &PromptPolicy,
        config: &EpisodeConfig,
        web: &dyn SearchProvider,
    ) -> Result<Trajectory, AgentError> {
        let mut gateway = Gateway::new(&*self.llm).with_decoding(self.decoding);
        let env = Environment { kg: &*self.kg, web };
        run_episode(claim, policy, config, env, &mut gateway).map(|(_, t)| t)
    }
}

pub fn load_graph(path: &Path) -> Result<FixtureGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading fixture graph {}", path.display()))?;
    FixtureGraph::from_json(&text).map_err(|e| anyhow::anyhow!("invalid fixture graph {}: {e}", path.display()))
}

pub fn load_search(path: &Path) -> Result<FixtureSearch> {
    let text = fs::read_to_string(path).with_context(|| format!("reading fixture web results {}", path.display()))?;
    FixtureSearch::from_json(&text).with_context(|| format!("invalid fixture web results {}", path.display()))
}

/// The configured starting policy, or the built-in seed policy.
pub fn load_policy(config: &AppConfig) -> Result<PromptPolicy> {
    match &config.policy {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading policy {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid policy {}", path.display()))
        }
        None => Ok(default_policy()),
    }
}

/// Serves a record's gold evidence documents as search results, whatever
/// the query.
pub struct GoldEvidence<'a> {
    pub record_id: &'a str,
    pub docs: &'a [String],
}

impl SearchProvider for GoldEvidence<'_> {
    fn search(&self, _query: &str, num: usize) -> Result<Vec<WebDocument>, WebError> {
        Ok(self
            .docs
            .iter()
            .enumerate()
            .take(num)
            .map(|(i, text)| WebDocument {
                url: format!("gold://{}/{i}", self.record_id),
                title: format!("gold evidence {i}"),
                snippet: text.clone(),
                provider_rank: i as u32 + 1,
                body: None,
            })
            .collect())
    }
}

/// Options of a benchmark run.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub parallel: usize,
    pub use_gold_evidence: bool,
}

/// Result of [`evaluate`]: the report, per-record outcomes and, for each
/// record, its trajectory or error message.
pub struct Evaluation {
    pub report: EvalReport,
    pub outcomes: Vec<RecordOutcome>,
    pub trajectories: Vec<Result<Trajectory, String>>,
    pub warnings: Vec<String>,
}

/// Runs one episode per record, up to `parallel` at a time, then reduces
/// the results in record order, so the report does not depend on
/// scheduling.
pub fn evaluate(
    services: &Services,
    records: &[DatasetRecord],
    policy: &PromptPolicy,
    config: &EpisodeConfig,
    options: EvalOptions,
) -> Result<Evaluation, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    let mut warnings = Vec::new();
    if options.use_gold_evidence
        && records
            .iter()
            .all(|r| r.evidence_docs.as_ref().is_none_or(Vec::is_empty))
    {
        warnings
            .push("--use-gold-evidence: the dataset has no gold evidence; using self-retrieved evidence".to_string());
    }
    let run_one = |r: &DatasetRecord| -> Result<Trajectory, String> {
        let gold = r
            .evidence_docs
            .as_deref()
            .filter(|d| options.use_gold_evidence && !d.is_empty());
        let result = match gold {
            Some(docs) => {
                let provider = GoldEvidence { record_id: &r.id, docs };
                services.run_claim_with(&r.claim, policy, config, &provider)
            }
            None => services.run_claim(&r.claim, policy, config),
        };
        result.map_err(|e| e.to_string())
    };
    let slots: Vec<Mutex<Option<Result<Trajectory, String>>>> = records.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..options.parallel.clamp(1, records.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(record) = records.get(i) else { break };
                *slots[i].lock().expect("result slot") = Some(run_one(record));
            });
        }
    });
    let trajectories: Vec<Result<Trajectory, String>> = slots
        .into_iter()
        .map(|m| m.into_inner().expect("result slot").expect("every record ran"))
        .collect();
    let mut results = trajectories.iter();
    let (report, outcomes) = run_benchmark(records, |_| results.next().expect("one result per record").clone())?;
    Ok(Evaluation {
        report,
        outcomes,
        trajectories,
        warnings,
    })
}
