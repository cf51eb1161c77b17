//! Chat-completion access for every decision the agent makes.
//!
//! Prompts live in a [`PromptPolicy`]; the only code that rewrites template
//! text is [`crate::optimize`]. A [`Gateway`] is created per episode and keeps
//! the call accounting for it.

mod gateway;
mod schema;
mod scripted;
mod template;

pub use gateway::{
    fingerprint, CallMeter, CallPurpose, Completion, Decoding, Gateway, LlmBackend, LlmError, LlmRequest, LlmResponse,
    ParseCause, Usage, STRUCTURED_RETRIES,
};
pub use schema::{extract_json_object, FieldKind, FieldSpec, Schema};
pub use scripted::{FnBackend, ScriptedBackend};
pub use template::{render, Bindings, ExpectedOutput, PromptPolicy, PromptTemplate, TemplateError};
