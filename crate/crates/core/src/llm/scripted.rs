use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;

use super::gateway::{fingerprint, Completion, Decoding, LlmBackend, LlmError};

/// Replies keyed by request fingerprint; anything unscripted is a
/// [`LlmError::ScriptMiss`].
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    replies: BTreeMap<String, String>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, fingerprint: impl Into<String>, reply: impl Into<String>) -> Self {
        self.insert(fingerprint, reply);
        self
    }

    pub fn insert(&mut self, fingerprint: impl Into<String>, reply: impl Into<String>) {
        self.replies.insert(fingerprint.into(), reply.into());
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }
}

impl LlmBackend for ScriptedBackend {
    fn complete(&self, prompt: &str, decoding: &Decoding) -> Result<Completion, LlmError> {
        let fp = fingerprint(prompt, decoding);
        self.replies
            .get(&fp)
            .map(|text| Completion::text(text.clone()))
            .ok_or(LlmError::ScriptMiss(fp))
    }
}

/// Backend driven by a closure over the rendered prompt. Handy for
/// simulated environments where the reply depends on prompt content.
pub struct FnBackend<F> {
    respond: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&str) -> Result<String, LlmError>,
{
    pub fn new(respond: F) -> Self {
        Self { respond }
    }
}

impl<F> LlmBackend for FnBackend<F>
where
    F: Fn(&str) -> Result<String, LlmError>,
{
    fn complete(&self, prompt: &str, _decoding: &Decoding) -> Result<Completion, LlmError> {
        (self.respond)(prompt).map(Completion::text)
    }
}

impl LlmBackend for Box<dyn LlmBackend + Send + Sync> {
    fn complete(&self, prompt: &str, decoding: &Decoding) -> Result<Completion, LlmError> {
        (**self).complete(prompt, decoding)
    }
}
