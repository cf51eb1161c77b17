use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::schema::{extract_json_object, Schema};
use super::template::{Bindings, PromptPolicy, TemplateError};
use crate::text::sha256_hex;

/// Repair re-asks after a structured reply fails to parse.
pub const STRUCTURED_RETRIES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for Decoding {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_output_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseCause {
    #[error("reply is not a JSON object")]
    NotJson,
    #[error("schema violation in field `{0}`")]
    SchemaViolation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("no scripted response for fingerprint {0}")]
    ScriptMiss(String),
    #[error("could not parse `{template}` reply after {attempts} attempts: {cause}")]
    ParseFailure {
        template: String,
        attempts: u32,
        cause: ParseCause,
    },
    #[error("schema violation in field `{0}`")]
    SchemaViolation(String),
}

/// Raw completion from a backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub input_tokens: Option<u64>,
    pub output_tokens: Option<u64>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            input_tokens: None,
            output_tokens: None,
        }
    }
}

/// A chat-completion provider. Implementations must be deterministic for
/// replay and scripted use; live ones are free not to be.
pub trait LlmBackend {
    fn complete(&self, prompt: &str, decoding: &Decoding) -> Result<Completion, LlmError>;
}

impl<B: LlmBackend + ?Sized> LlmBackend for &B {
    fn complete(&self, prompt: &str, decoding: &Decoding) -> Result<Completion, LlmError> {
        (**self).complete(prompt, decoding)
    }
}

/// Stable hash of the rendered prompt plus decoding parameters.
pub fn fingerprint(prompt: &str, decoding: &Decoding) -> String {
    let keyed = alloc::format!(
        "{prompt}\u{1f}{:?}\u{1f}{}",
        decoding.temperature,
        decoding.max_output_tokens
    );
    sha256_hex(keyed.as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub template_id: String,
    pub bindings: Bindings,
    pub decoding: Option<Decoding>,
}

impl LlmRequest {
    pub fn new(template_id: impl Into<String>) -> Self {
        Self {
            template_id: template_id.into(),
            bindings: Bindings::new(),
            decoding: None,
        }
    }

    pub fn bind(mut self, name: &str, value: impl Into<String>) -> Self {
        self.bindings.insert(name.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub calls: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmResponse {
    pub raw_text: String,
    pub parsed: Option<Map<String, Value>>,
    pub usage: Usage,
}

/// What a call is for. Only pruning and final-verdict calls count toward
/// the retrieval cost model; everything else is tracked separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallPurpose {
    FrontierPruning,
    RelationPruning,
    Verdict,
    ForcedVerdict,
    ActionSelection,
    Sufficiency,
    QueryFormulation,
    EvidenceFilter,
    TripletExtraction,
    Reflection,
    TextualGradient,
}

/// Per-episode call accounting. `total` counts every backend invocation,
/// `by_purpose` counts first attempts and `retries` counts repair re-asks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallMeter {
    pub total: u64,
    pub retries: u64,
    pub by_purpose: BTreeMap<CallPurpose, u64>,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl CallMeter {
    pub fn count(&self, purpose: CallPurpose) -> u64 {
        self.by_purpose.get(&purpose).copied().unwrap_or(0)
    }
}

/// Per-episode handle over a shared backend.
pub struct Gateway<'a> {
    backend: &'a dyn LlmBackend,
    decoding: Decoding,
    meter: CallMeter,
    warnings: Vec<String>,
}

impl<'a> Gateway<'a> {
    pub fn new(backend: &'a dyn LlmBackend) -> Self {
        Self {
            backend,
            decoding: Decoding::default(),
            meter: CallMeter::default(),
            warnings: Vec::new(),
        }
    }

    pub fn with_decoding(mut self, decoding: Decoding) -> Self {
        self.decoding = decoding;
        self
    }

    pub fn meter(&self) -> &CallMeter {
        &self.meter
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn take_warnings(&mut self) -> Vec<String> {
        core::mem::take(&mut self.warnings)
    }

    fn render(&self, policy: &PromptPolicy, request: &LlmRequest) -> Result<String, LlmError> {
        let template = policy
            .get(&request.template_id)
            .ok_or_else(|| LlmError::UnknownTemplate(request.template_id.clone()))?;
        let body = template.render(&request.bindings)?;
        Ok(alloc::format!("## {}\n{}", template.id, body))
    }

    fn invoke(&mut self, prompt: &str, decoding: &Decoding) -> Result<Completion, LlmError> {
        self.meter.total += 1;
        let completion = self.backend.complete(prompt, decoding)?;
        self.meter.input_tokens += completion
            .input_tokens
            .unwrap_or_else(|| prompt.split_whitespace().count() as u64);
        self.meter.output_tokens += completion
            .output_tokens
            .unwrap_or_else(|| completion.text.split_whitespace().count() as u64);
        Ok(completion)
    }

    fn note_first_attempt(&mut self, purpose: CallPurpose) {
        *self.meter.by_purpose.entry(purpose).or_insert(0) += 1;
    }

    /// One free-text completion.
    pub fn complete(
        &mut self,
        policy: &PromptPolicy,
        request: &LlmRequest,
        purpose: CallPurpose,
    ) -> Result<LlmResponse, LlmError> {
        let prompt = self.render(policy, request)?;
        let decoding = request.decoding.unwrap_or(self.decoding);
        self.note_first_attempt(purpose);
        let completion = self.invoke(&prompt, &decoding)?;
        Ok(LlmResponse {
            usage: usage_of(&completion, &prompt),
            raw_text: completion.text,
            parsed: None,
        })
    }

    /// A completion that must parse into `schema`. Failed parses are re-asked
    /// up to [`STRUCTURED_RETRIES`] times with a repair instruction appended.
    pub fn complete_structured(
        &mut self,
        policy: &PromptPolicy,
        request: &LlmRequest,
        schema: &Schema,
        purpose: CallPurpose,
    ) -> Result<LlmResponse, LlmError> {
        let prompt = self.render(policy, request)?;
        let decoding = request.decoding.unwrap_or(self.decoding);
        self.note_first_attempt(purpose);
        let mut current = prompt.clone();
        let mut attempt = 0;
        loop {
            let completion = self.invoke(&current, &decoding)?;
            let cause = match extract_json_object(&completion.text) {
                Ok(mut map) => match schema.validate(&mut map) {
                    Ok(()) => {
                        return Ok(LlmResponse {
                            usage: usage_of(&completion, &current),
                            raw_text: completion.text,
                            parsed: Some(map),
                        })
                    }
                    Err(cause) => cause,
                },
                Err(cause) => cause,
            };
            if attempt == STRUCTURED_RETRIES {
                return Err(LlmError::ParseFailure {
                    template: request.template_id.clone(),
                    attempts: attempt + 1,
                    cause,
                });
            }
            attempt += 1;
            self.meter.retries += 1;
            current = alloc::format!(
                "{prompt}\n\nREPAIR {attempt}: the previous reply was rejected ({cause}). \
                 Reply with only a JSON object of the form {}.",
                schema.describe()
            );
        }
    }
}

fn usage_of(completion: &Completion, prompt: &str) -> Usage {
    Usage {
        calls: 1,
        input_tokens: completion
            .input_tokens
            .unwrap_or_else(|| prompt.split_whitespace().count() as u64),
        output_tokens: completion
            .output_tokens
            .unwrap_or_else(|| completion.text.split_whitespace().count() as u64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ExpectedOutput, FieldKind, FnBackend, PromptTemplate, ScriptedBackend};
    use alloc::vec;

    fn policy() -> PromptPolicy {
        PromptPolicy::new()
            .with(PromptTemplate::new("ask", "Q: {claim}", ExpectedOutput::FreeText))
            .with(PromptTemplate::new(
                "act",
                "Choose for {claim}",
                ExpectedOutput::Structured,
            ))
    }

    fn action_schema() -> Schema {
        Schema::new()
            .required(
                "action",
                FieldKind::Enum(vec!["verdict", "expandKg", "webSearch", "initKgRetrieval"]),
            )
            .required("label", FieldKind::Text { non_empty: true })
    }

    fn prompt_for(id: &str, body: &str) -> String {
        alloc::format!("## {id}\n{body}")
    }

    #[test]
    fn scripted_echo_and_counter() {
        let fp = fingerprint(&prompt_for("ask", "Q: X"), &Decoding::default());
        let backend = ScriptedBackend::new().with(fp, "SUFFICIENT");
        let mut gw = Gateway::new(&backend);
        let req = LlmRequest::new("ask").bind("claim", "X");
        let first = gw.complete(&policy(), &req, CallPurpose::Sufficiency).unwrap();
        let second = gw.complete(&policy(), &req, CallPurpose::Sufficiency).unwrap();
        assert_eq!(first.raw_text, "SUFFICIENT");
        assert_eq!(first, second);
        assert_eq!(gw.meter().total, 2);
        assert_eq!(first.usage.calls, 1);
    }

    #[test]
    fn unscripted_fingerprint_is_a_miss() {
        let backend = ScriptedBackend::new();
        let mut gw = Gateway::new(&backend);
        let err = gw
            .complete(
                &policy(),
                &LlmRequest::new("ask").bind("claim", "Y"),
                CallPurpose::Sufficiency,
            )
            .unwrap_err();
        assert!(matches!(err, LlmError::ScriptMiss(_)));
        assert_eq!(gw.meter().total, 1);
    }

    #[test]
    fn structured_well_formed_reply() {
        let backend = FnBackend::new(|_: &str| Ok(r#"{"action":"verdict","label":"Supported"}"#.into()));
        let mut gw = Gateway::new(&backend);
        let req = LlmRequest::new("act").bind("claim", "X");
        let resp = gw
            .complete_structured(&policy(), &req, &action_schema(), CallPurpose::ActionSelection)
            .unwrap();
        let parsed = resp.parsed.unwrap();
        assert_eq!(parsed["action"], "verdict");
        assert_eq!(parsed["label"], "Supported");
    }

    #[test]
    fn structured_succeeds_on_second_retry() {
        // Three-entry script: the base prompt and the first repair prompt get
        // garbage, the second repair prompt gets valid JSON.
        let base = prompt_for("act", "Choose for X");
        let decoding = Decoding::default();
        let repair = |n: u32, cause: &ParseCause| {
            alloc::format!(
                "{base}\n\nREPAIR {n}: the previous reply was rejected ({cause}). \
                 Reply with only a JSON object of the form {}.",
                action_schema().describe()
            )
        };
        let backend = ScriptedBackend::new()
            .with(fingerprint(&base, &decoding), "not json")
            .with(fingerprint(&repair(1, &ParseCause::NotJson), &decoding), "not json")
            .with(
                fingerprint(&repair(2, &ParseCause::NotJson), &decoding),
                r#"{"action":"verdict","label":"Refuted"}"#,
            );
        let mut gw = Gateway::new(&backend);
        let req = LlmRequest::new("act").bind("claim", "X");
        let resp = gw
            .complete_structured(&policy(), &req, &action_schema(), CallPurpose::ActionSelection)
            .unwrap();
        assert_eq!(resp.parsed.unwrap()["label"], "Refuted");
        assert_eq!(gw.meter().total, 3);
        assert_eq!(gw.meter().retries, 2);
        assert_eq!(gw.meter().count(CallPurpose::ActionSelection), 1);
    }

    #[test]
    fn structured_gives_up_after_retries() {
        let backend = FnBackend::new(|_: &str| Ok(r#"{"action":"verdict"}"#.into()));
        let mut gw = Gateway::new(&backend);
        let req = LlmRequest::new("act").bind("claim", "X");
        let err = gw
            .complete_structured(&policy(), &req, &action_schema(), CallPurpose::Verdict)
            .unwrap_err();
        assert_eq!(
            err,
            LlmError::ParseFailure {
                template: "act".into(),
                attempts: 3,
                cause: ParseCause::SchemaViolation("label".into()),
            }
        );
        assert_eq!(gw.meter().total, 3);
    }

    #[test]
    fn unknown_template_and_missing_binding_make_no_call() {
        let backend = FnBackend::new(|_: &str| Ok(String::new()));
        let mut gw = Gateway::new(&backend);
        let err = gw
            .complete(&policy(), &LlmRequest::new("nope"), CallPurpose::Verdict)
            .unwrap_err();
        assert_eq!(err, LlmError::UnknownTemplate("nope".into()));
        let err = gw
            .complete(&policy(), &LlmRequest::new("ask"), CallPurpose::Verdict)
            .unwrap_err();
        assert_eq!(err, LlmError::Template(TemplateError::MissingBinding("claim".into())));
        assert_eq!(gw.meter().total, 0);
    }

    #[test]
    fn fingerprint_depends_on_decoding() {
        let a = fingerprint("p", &Decoding::default());
        let b = fingerprint(
            "p",
            &Decoding {
                temperature: 0.5,
                ..Decoding::default()
            },
        );
        let c = fingerprint(
            "p",
            &Decoding {
                max_output_tokens: 7,
                ..Decoding::default()
            },
        );
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, fingerprint("p", &Decoding::default()));
    }
}
