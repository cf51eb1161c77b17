use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Value};

use super::gateway::ParseCause;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    /// Any string; `non_empty` rejects blank values.
    Text {
        non_empty: bool,
    },
    Number,
    Integer,
    /// Case-insensitive match against the listed values; the canonical
    /// spelling is written back into the payload.
    Enum(Vec<&'static str>),
    Array(alloc::boxed::Box<FieldKind>),
    /// An object checked against a nested schema.
    Object(Schema),
    Any,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub name: &'static str,
    pub kind: FieldKind,
    pub required: bool,
}

/// Required fields and value domains for a structured LLM reply.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schema {
    pub fields: Vec<FieldSpec>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn required(mut self, name: &'static str, kind: FieldKind) -> Self {
        self.fields.push(FieldSpec {
            name,
            kind,
            required: true,
        });
        self
    }

    pub fn optional(mut self, name: &'static str, kind: FieldKind) -> Self {
        self.fields.push(FieldSpec {
            name,
            kind,
            required: false,
        });
        self
    }

    /// One-line description appended to repair prompts.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        for f in &self.fields {
            let req = if f.required { "" } else { " (optional)" };
            parts.push(alloc::format!("\"{}\": {}{}", f.name, describe_kind(&f.kind), req));
        }
        alloc::format!("{{{}}}", parts.join(", "))
    }

    /// Validates `payload` in place, canonicalizing enum spellings.
    pub fn validate(&self, payload: &mut Map<String, Value>) -> Result<(), ParseCause> {
        for field in &self.fields {
            match payload.get_mut(field.name) {
                None | Some(Value::Null) => {
                    if field.required {
                        return Err(ParseCause::SchemaViolation(field.name.to_string()));
                    }
                }
                Some(value) => check_kind(&field.kind, value, field.name)?,
            }
        }
        Ok(())
    }
}

fn describe_kind(kind: &FieldKind) -> String {
    match kind {
        FieldKind::Text { .. } => "string".into(),
        FieldKind::Number => "number".into(),
        FieldKind::Integer => "integer".into(),
        FieldKind::Enum(values) => values.join(" | "),
        FieldKind::Array(inner) => alloc::format!("[{}]", describe_kind(inner)),
        FieldKind::Object(schema) => schema.describe(),
        FieldKind::Any => "any".into(),
    }
}

fn check_kind(kind: &FieldKind, value: &mut Value, name: &str) -> Result<(), ParseCause> {
    let bad = || ParseCause::SchemaViolation(name.to_string());
    match kind {
        FieldKind::Text { non_empty } => match value {
            Value::String(s) if !*non_empty || !s.trim().is_empty() => Ok(()),
            _ => Err(bad()),
        },
        FieldKind::Number => match value {
            Value::Number(n) if n.as_f64().is_some_and(f64::is_finite) => Ok(()),
            // Models often quote numbers.
            Value::String(s) => match s.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => {
                    *value = serde_json::Number::from_f64(x).map(Value::Number).ok_or_else(bad)?;
                    Ok(())
                }
                _ => Err(bad()),
            },
            _ => Err(bad()),
        },
        FieldKind::Integer => match value {
            Value::Number(n) if n.is_i64() || n.is_u64() => Ok(()),
            _ => Err(bad()),
        },
        FieldKind::Enum(values) => {
            let s = value.as_str().ok_or_else(bad)?;
            let canon = values
                .iter()
                .find(|v| v.eq_ignore_ascii_case(s.trim()))
                .ok_or_else(bad)?;
            *value = Value::String(canon.to_string());
            Ok(())
        }
        FieldKind::Array(inner) => match value {
            Value::Array(items) => items.iter_mut().try_for_each(|item| check_kind(inner, item, name)),
            _ => Err(bad()),
        },
        FieldKind::Object(schema) => match value {
            Value::Object(map) => schema.validate(map),
            _ => Err(bad()),
        },
        FieldKind::Any => Ok(()),
    }
}

/// Finds the outermost JSON object in a model reply, tolerating code fences
/// and surrounding prose.
pub fn extract_json_object(raw: &str) -> Result<Map<String, Value>, ParseCause> {
    let start = raw.find('{').ok_or(ParseCause::NotJson)?;
    let end = raw.rfind('}').ok_or(ParseCause::NotJson)?;
    if end < start {
        return Err(ParseCause::NotJson);
    }
    match serde_json::from_str::<Value>(&raw[start..=end]) {
        Ok(Value::Object(map)) => Ok(map),
        _ => Err(ParseCause::NotJson),
    }
}
