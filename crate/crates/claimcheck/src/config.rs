//! Application configuration: a JSON file, overridden field by field by
//! command-line flags. Environment variables only carry API keys; the
//! config names the variables to read.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use claimcheck_core::eval::DatasetFormat;
use claimcheck_core::optimize::OptimizeConfig;
use claimcheck_core::EpisodeConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{ChatSettings, SerperSettings, ThrottleConfig, WikidataSettings};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// OpenAI-compatible HTTP endpoint.
    #[default]
    Live,
    /// Fixed replies keyed by request fingerprint.
    Scripted,
    /// Responses recorded in a cassette, served in recorded order.
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub backend: BackendKind,
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// Script (scripted) or cassette (replay) to read.
    pub cassette: Option<PathBuf>,
    /// Where a live run records its interactions.
    pub record: Option<PathBuf>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub requests_per_second: f64,
    pub max_in_flight: usize,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for LlmSettings {
    fn default() -> Self {
        let chat = ChatSettings::default();
        Self {
            backend: BackendKind::Live,
            endpoint: chat.endpoint,
            model: chat.model,
            api_key_env: chat.api_key_env,
            cassette: None,
            record: None,
            timeout_secs: chat.timeout.as_secs_f64(),
            max_retries: chat.max_retries,
            requests_per_second: chat.throttle.requests_per_second,
            max_in_flight: chat.throttle.max_in_flight,
            temperature: 0.0,
            max_output_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KgSettings {
    /// Fixture graph file; when unset the live endpoints are used.
    pub fixture: Option<PathBuf>,
    pub sparql_endpoint: String,
    pub search_endpoint: String,
    pub cache_dir: Option<PathBuf>,
    pub timeout_secs: f64,
    pub requests_per_second: f64,
}

impl Default for KgSettings {
    fn default() -> Self {
        let wd = WikidataSettings::default();
        Self {
            fixture: None,
            sparql_endpoint: wd.sparql_endpoint,
            search_endpoint: wd.search_endpoint,
            cache_dir: None,
            timeout_secs: wd.timeout.as_secs_f64(),
            requests_per_second: wd.throttle.requests_per_second,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WebSettings {
    /// Fixture results file; when unset the live provider is used.
    pub fixture: Option<PathBuf>,
    pub endpoint: String,
    pub api_key_env: String,
    pub requests_per_second: f64,
}

impl Default for WebSettings {
    fn default() -> Self {
        let serper = SerperSettings::default();
        Self {
            fixture: None,
            endpoint: serper.endpoint,
            api_key_env: serper.api_key_env,
            requests_per_second: serper.throttle.requests_per_second,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub llm: LlmSettings,
    pub kg: KgSettings,
    pub web: WebSettings,
    pub episode: EpisodeConfig,
    pub optimize: OptimizeConfig,
    pub dataset: DatasetFormat,
    /// Prompt policy JSON to start from; the built-in seed policy otherwise.
    pub policy: Option<PathBuf>,
    /// Directory for reports when no explicit output path is given.
    pub reports_dir: Option<PathBuf>,
    pub parallel: usize,
    pub use_gold_evidence: bool,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            llm: LlmSettings::default(),
            kg: KgSettings::default(),
            web: WebSettings::default(),
            episode: EpisodeConfig::default(),
            optimize: OptimizeConfig::default(),
            dataset: DatasetFormat::default(),
            policy: None,
            reports_dir: None,
            parallel: 1,
            use_gold_evidence: false,
        }
    }
}

fn secs(s: f64) -> Duration {
    Duration::from_secs_f64(s.max(0.001))
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Offline backends need files for every service; live ones need
    /// endpoints.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let offline = self.llm.backend != BackendKind::Live;
        if offline {
            if self.llm.cassette.is_none() {
                return Err(ConfigError::Invalid(format!(
                    "{:?} backend needs a script or cassette file (--cassette or llm.cassette)",
                    self.llm.backend
                )));
            }
            if self.kg.fixture.is_none() {
                return Err(ConfigError::Invalid(
                    "offline backends need a fixture graph (--kg PATH or kg.fixture)".into(),
                ));
            }
            if self.web.fixture.is_none() {
                return Err(ConfigError::Invalid(
                    "offline backends need fixture web results (--web PATH or web.fixture)".into(),
                ));
            }
        } else if self.llm.endpoint.trim().is_empty() {
            return Err(ConfigError::Invalid("live backend needs llm.endpoint".into()));
        }
        if self.kg.fixture.is_none() && (self.kg.sparql_endpoint.is_empty() || self.kg.search_endpoint.is_empty()) {
            return Err(ConfigError::Invalid("live knowledge graph needs both endpoints".into()));
        }
        if self.web.fixture.is_none() && self.web.endpoint.is_empty() {
            return Err(ConfigError::Invalid("live web search needs web.endpoint".into()));
        }
        let e = &self.episode;
        if e.k == 0 || e.n_hops == 0 || e.n_init == 0 || e.n_init > e.n_hops {
            return Err(ConfigError::Invalid(format!(
                "episode needs k >= 1 and 1 <= n_init <= n_hops (got k={}, n_init={}, n_hops={})",
                e.k, e.n_init, e.n_hops
            )));
        }
        if !(0.0..=1.0).contains(&e.web.threshold) {
            return Err(ConfigError::Invalid(
                "episode.web.threshold must be within [0, 1]".into(),
            ));
        }
        if self.parallel == 0 {
            return Err(ConfigError::Invalid("parallel must be at least 1".into()));
        }
        Ok(())
    }

    pub fn chat_settings(&self) -> ChatSettings {
        let l = &self.llm;
        ChatSettings {
            endpoint: l.endpoint.clone(),
            model: l.model.clone(),
            api_key_env: l.api_key_env.clone(),
            timeout: secs(l.timeout_secs),
            max_retries: l.max_retries,
            throttle: ThrottleConfig {
                requests_per_second: l.requests_per_second,
                max_in_flight: l.max_in_flight,
                ..ThrottleConfig::default()
            },
            ..ChatSettings::default()
        }
    }

    pub fn wikidata_settings(&self) -> WikidataSettings {
        let k = &self.kg;
        WikidataSettings {
            sparql_endpoint: k.sparql_endpoint.clone(),
            search_endpoint: k.search_endpoint.clone(),
            timeout: secs(k.timeout_secs),
            cache_dir: k.cache_dir.clone(),
            throttle: ThrottleConfig {
                requests_per_second: k.requests_per_second,
                ..ThrottleConfig::default()
            },
            ..WikidataSettings::default()
        }
    }

    pub fn serper_settings(&self) -> SerperSettings {
        SerperSettings {
            endpoint: self.web.endpoint.clone(),
            api_key_env: self.web.api_key_env.clone(),
            throttle: ThrottleConfig {
                requests_per_second: self.web.requests_per_second,
                ..ThrottleConfig::default()
            },
            ..SerperSettings::default()
        }
    }
}
