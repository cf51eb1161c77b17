use std::time::Duration;

use claimcheck_core::web::{SearchProvider, WebDocument, WebError};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::ratelimit::{Throttle, ThrottleConfig};
use super::read_key;

#[derive(Debug, Clone, PartialEq)]
pub struct SerperSettings {
    pub endpoint: String,
    pub api_key_env: String,
    pub timeout: Duration,
    pub throttle: ThrottleConfig,
}

impl Default for SerperSettings {
    fn default() -> Self {
        Self {
            endpoint: "https://google.serper.dev/search".into(),
            api_key_env: "SERPER_API_KEY".into(),
            timeout: Duration::from_secs(15),
            throttle: ThrottleConfig::default(),
        }
    }
}

/// Serper-compatible search: `POST {q, num}` with an `X-API-KEY` header.
pub struct SerperSearch {
    settings: SerperSettings,
    api_key: String,
    client: Client,
    throttle: Throttle,
}

impl SerperSearch {
    pub fn new(settings: SerperSettings) -> Result<Self, WebError> {
        let api_key = read_key(&settings.api_key_env)
            .ok_or_else(|| WebError::Transport(format!("environment variable {} is not set", settings.api_key_env)))?;
        let client = Client::builder()
            .timeout(settings.timeout)
            .build()
            .map_err(|e| WebError::Transport(e.to_string()))?;
        Ok(Self {
            throttle: Throttle::new(settings.throttle),
            settings,
            api_key,
            client,
        })
    }
}

/// Organic results of a Serper response. Ranks come from `position`
/// when present, otherwise from list order (1-based).
pub fn parse_organic(body: &Value) -> Vec<WebDocument> {
    body["organic"]
        .as_array()
        .into_iter()
        .flatten()
        .enumerate()
        .filter_map(|(i, item)| {
            let url = item["link"].as_str()?;
            Some(WebDocument {
                url: url.to_string(),
                title: item["title"].as_str().unwrap_or("").to_string(),
                snippet: item["snippet"].as_str().unwrap_or("").to_string(),
                provider_rank: item["position"].as_u64().map_or(i as u32 + 1, |p| p as u32),
                body: None,
            })
        })
        .collect()
}

impl SearchProvider for SerperSearch {
    fn search(&self, query: &str, num: usize) -> Result<Vec<WebDocument>, WebError> {
        let response = {
            let _permit = self.throttle.acquire();
            self.client
                .post(&self.settings.endpoint)
                .header("X-API-KEY", &self.api_key)
                .json(&json!({"q": query, "num": num}))
                .send()
                .map_err(|e| WebError::Transport(e.to_string()))?
        };
        match response.status() {
            StatusCode::TOO_MANY_REQUESTS => Err(WebError::ProviderQuotaExceeded),
            s if !s.is_success() => Err(WebError::Transport(format!("HTTP {s}"))),
            _ => {
                let body: Value = response
                    .json()
                    .map_err(|e| WebError::Transport(format!("unreadable response: {e}")))?;
                Ok(parse_organic(&body))
            }
        }
    }
}
