use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("missing binding for placeholder `{0}`")]
    MissingBinding(String),
    #[error("malformed template: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedOutput {
    #[default]
    FreeText,
    Structured,
}

impl ExpectedOutput {
    fn is_free_text(&self) -> bool {
        matches!(self, ExpectedOutput::FreeText)
    }
}

/// A named prompt with `{placeholder}` slots. `{{` and `}}` are literal braces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: String,
    pub version: u32,
    pub text: String,
    pub expected_output: ExpectedOutput,
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, text: impl Into<String>, expected_output: ExpectedOutput) -> Self {
        Self {
            id: id.into(),
            version: 1,
            text: text.into(),
            expected_output,
        }
    }

    pub fn placeholders(&self) -> Result<BTreeSet<String>, TemplateError> {
        let mut names = BTreeSet::new();
        for piece in parse(&self.text)? {
            if let Piece::Slot(name) = piece {
                names.insert(name.to_string());
            }
        }
        Ok(names)
    }

    pub fn render(&self, bindings: &Bindings) -> Result<String, TemplateError> {
        render(&self.text, bindings)
    }
}

enum Piece<'a> {
    Literal(&'a str),
    Brace(char),
    Slot(&'a str),
}

fn parse(text: &str) -> Result<Vec<Piece<'_>>, TemplateError> {
    let mut pieces = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                pieces.push(Piece::Literal(&text[start..i]));
                pieces.push(Piece::Brace('{'));
                i += 2;
                start = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                pieces.push(Piece::Literal(&text[start..i]));
                pieces.push(Piece::Brace('}'));
                i += 2;
                start = i;
            }
            b'{' => {
                let close = text[i + 1..]
                    .find('}')
                    .ok_or_else(|| TemplateError::Malformed(alloc::format!("unclosed `{{` at byte {i}")))?;
                let name = &text[i + 1..i + 1 + close];
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(TemplateError::Malformed(alloc::format!("bad placeholder `{name}`")));
                }
                pieces.push(Piece::Literal(&text[start..i]));
                pieces.push(Piece::Slot(name));
                i += close + 2;
                start = i;
            }
            b'}' => {
                return Err(TemplateError::Malformed(alloc::format!("stray `}}` at byte {i}")));
            }
            _ => i += 1,
        }
    }
    pieces.push(Piece::Literal(&text[start..]));
    Ok(pieces)
}

/// Substitutes every `{name}` in `text` from `bindings`.
pub fn render(text: &str, bindings: &Bindings) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(text.len());
    for piece in parse(text)? {
        match piece {
            Piece::Literal(s) => out.push_str(s),
            Piece::Brace(c) => out.push(c),
            Piece::Slot(name) => {
                let value = bindings
                    .get(name)
                    .ok_or_else(|| TemplateError::MissingBinding(name.to_string()))?;
                out.push_str(value);
            }
        }
    }
    Ok(out)
}

/// The trainable part of the agent: a set of prompt templates keyed by id.
///
/// Serializes as `{template id: {version, text}}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, TemplateBody>", into = "BTreeMap<String, TemplateBody>")]
pub struct PromptPolicy {
    templates: BTreeMap<String, PromptTemplate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TemplateBody {
    version: u32,
    text: String,
    #[serde(default, skip_serializing_if = "ExpectedOutput::is_free_text")]
    expected_output: ExpectedOutput,
}

impl From<BTreeMap<String, TemplateBody>> for PromptPolicy {
    fn from(map: BTreeMap<String, TemplateBody>) -> Self {
        let templates = map
            .into_iter()
            .map(|(id, body)| {
                let template = PromptTemplate {
                    id: id.clone(),
                    version: body.version.max(1),
                    text: body.text,
                    expected_output: body.expected_output,
                };
                (id, template)
            })
            .collect();
        Self { templates }
    }
}

impl From<PromptPolicy> for BTreeMap<String, TemplateBody> {
    fn from(policy: PromptPolicy) -> Self {
        policy
            .templates
            .into_iter()
            .map(|(id, t)| {
                let body = TemplateBody {
                    version: t.version,
                    text: t.text,
                    expected_output: t.expected_output,
                };
                (id, body)
            })
            .collect()
    }
}

impl PromptPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the template with the same id.
    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.id.clone(), template);
    }

    pub fn with(mut self, template: PromptTemplate) -> Self {
        self.insert(template);
        self
    }

    pub fn get(&self, id: &str) -> Option<&PromptTemplate> {
        self.templates.get(id)
    }

    pub fn templates(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.templates.values()
    }

    /// Replaces the text of `id` and bumps its version. Returns `false` when
    /// the template is unknown or the text is unchanged.
    pub(crate) fn revise(&mut self, id: &str, text: String) -> bool {
        match self.templates.get_mut(id) {
            Some(t) if t.text != text => {
                t.text = text;
                t.version += 1;
                true
            }
            _ => false,
        }
    }

    /// Short content digest, used as a policy id in optimization reports.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        let mut d = crate::text::sha256_hex(json.as_bytes());
        d.truncate(12);
        d
    }
}
