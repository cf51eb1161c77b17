use std::time::Duration;

use claimcheck_core::llm::{Completion, Decoding, LlmBackend, LlmError};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::ratelimit::{Throttle, ThrottleConfig};
use super::{jittered, read_key};

#[derive(Debug, Clone, PartialEq)]
pub struct ChatSettings {
    /// Base URL; `/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub timeout: Duration,
    /// Re-sends after a 429, a 5xx or a connection error.
    pub max_retries: u32,
    pub retry_delay: Duration,
    pub throttle: ThrottleConfig,
}

impl Default for ChatSettings {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout: Duration::from_secs(60),
            max_retries: 2,
            retry_delay: Duration::from_millis(500),
            throttle: ThrottleConfig::default(),
        }
    }
}

/// OpenAI-compatible chat-completion client. One user message per call.
pub struct ChatBackend {
    settings: ChatSettings,
    api_key: String,
    client: Client,
    throttle: Throttle,
}

impl ChatBackend {
    /// Fails when the key variable is unset or the client cannot be built.
    pub fn new(settings: ChatSettings) -> Result<Self, LlmError> {
        let api_key = read_key(&settings.api_key_env)
            .ok_or_else(|| LlmError::Transport(format!("environment variable {} is not set", settings.api_key_env)))?;
        let client = Client::builder()
            .timeout(settings.timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(Self {
            throttle: Throttle::new(settings.throttle),
            settings,
            api_key,
            client,
        })
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.settings.endpoint.trim_end_matches('/'))
    }

    fn send(&self, body: &Value) -> Result<Result<Value, LlmError>, LlmError> {
        let _permit = self.throttle.acquire();
        let response = match self
            .client
            .post(self.url())
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
        {
            Ok(r) => r,
            // connection problems are worth another try
            Err(e) => return Ok(Err(LlmError::Transport(e.to_string()))),
        };
        let status = response.status();
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Ok(Err(LlmError::Transport(format!("HTTP {status}"))));
        }
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            return Err(LlmError::Transport(format!(
                "HTTP {status}: {}",
                text.chars().take(200).collect::<String>()
            )));
        }
        response
            .json::<Value>()
            .map(Ok)
            .map_err(|e| LlmError::Transport(format!("unreadable response body: {e}")))
    }
}

/// Pulls the reply text and token usage out of a chat-completion body.
pub fn parse_chat_response(body: &Value) -> Result<Completion, LlmError> {
    let text = body["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| LlmError::Transport("response has no choices[0].message.content".into()))?;
    Ok(Completion {
        text: text.to_string(),
        input_tokens: body["usage"]["prompt_tokens"].as_u64(),
        output_tokens: body["usage"]["completion_tokens"].as_u64(),
    })
}

impl LlmBackend for ChatBackend {
    fn complete(&self, prompt: &str, decoding: &Decoding) -> Result<Completion, LlmError> {
        let body = json!({
            "model": self.settings.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": decoding.temperature,
            "max_tokens": decoding.max_output_tokens,
        });
        let mut attempt = 0;
        loop {
            match self.send(&body)? {
                Ok(value) => return parse_chat_response(&value),
                Err(e) if attempt >= self.settings.max_retries => return Err(e),
                Err(e) => {
                    log::warn!("chat request failed ({e}); retrying");
                    attempt += 1;
                    std::thread::sleep(jittered(self.settings.retry_delay * attempt));
                }
            }
        }
    }
}
