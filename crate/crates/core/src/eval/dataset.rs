use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EvalError;
use crate::agent::Label;

/// How a raw dataset label is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelMapping {
    Supported,
    Refuted,
    /// Records without verifiable evidence are removed.
    Drop,
}

fn label_key(raw: &str) -> String {
    raw.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// The built-in binary standardization. Only plainly supported labels are
/// `Supported`; partially true, mixed, misleading and conflicting labels
/// join `Refuted`; "not enough info"-style labels are dropped.
pub fn default_label_mapping(raw: &str) -> Option<LabelMapping> {
    use LabelMapping::*;
    Some(match label_key(raw).as_str() {
        "supported" | "supports" | "support" | "true" | "correct" | "factual" | "verified" | "entailment" => Supported,
        "refuted"
        | "refutes"
        | "refute"
        | "false"
        | "notsupported"
        | "unsupported"
        | "incorrect"
        | "mostlytrue"
        | "halftrue"
        | "barelytrue"
        | "mostlyfalse"
        | "pantsfire"
        | "pantsonfire"
        | "mixed"
        | "mixture"
        | "partiallytrue"
        | "partlytrue"
        | "partiallycorrect"
        | "misleading"
        | "ambiguous"
        | "conflicting"
        | "conflictingevidence"
        | "conflictingevidencecherrypicking"
        | "cherrypicking"
        | "contradiction" => Refuted,
        "nei"
        | "notenoughinfo"
        | "notenoughinformation"
        | "notenoughevidence"
        | "unverifiable"
        | "unverified"
        | "unproven"
        | "notverifiable" => Drop,
        _ => return None,
    })
}

/// Field names of one dataset family plus label overrides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetFormat {
    pub name: String,
    pub id_field: String,
    pub claim_field: String,
    pub label_field: String,
    pub evidence_field: Option<String>,
    /// Raw label → mapping; consulted before the built-in table. Keys are
    /// compared after the same normalization as built-in labels.
    pub label_map: BTreeMap<String, LabelMapping>,
}

impl Default for DatasetFormat {
    fn default() -> Self {
        Self {
            name: String::from("dataset"),
            id_field: String::from("id"),
            claim_field: String::from("claim"),
            label_field: String::from("label"),
            evidence_field: Some(String::from("evidence")),
            label_map: BTreeMap::new(),
        }
    }
}

impl DatasetFormat {
    pub fn map_label(&self, raw: &str) -> Option<LabelMapping> {
        let key = label_key(raw);
        self.label_map
            .iter()
            .find(|(k, _)| label_key(k) == key)
            .map(|(_, m)| *m)
            .or_else(|| default_label_mapping(raw))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub claim: String,
    pub gold_label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence_docs: Option<Vec<String>>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    /// Records removed for lacking verifiable evidence.
    pub dropped: usize,
}

impl Dataset {
    /// Share of `Refuted` records, in percent.
    pub fn negative_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let refuted = self.records.iter().filter(|r| r.gold_label == Label::Refuted).count();
        100.0 * refuted as f64 / self.records.len() as f64
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn evidence_docs(v: &Value) -> Option<Vec<String>> {
    match v {
        Value::String(s) if !s.trim().is_empty() => Some(alloc::vec![s.clone()]),
        Value::Array(items) => {
            let docs: Vec<String> = items
                .iter()
                .filter_map(|i| match i {
                    Value::String(s) => Some(s.clone()),
                    Value::Null => None,
                    other => Some(other.to_string()),
                })
                .filter(|s| !s.trim().is_empty())
                .collect();
            (!docs.is_empty()).then_some(docs)
        }
        _ => None,
    }
}

/// Parses JSON Lines into binary-labeled records sorted by id. Blank lines
/// are skipped; line numbers in errors are 1-based.
pub fn load_dataset(text: &str, format: &DatasetFormat) -> Result<Dataset, EvalError> {
    let mut records: Vec<DatasetRecord> = Vec::new();
    let mut dropped = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| EvalError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let field = |name: &str| -> Result<String, EvalError> {
            value.get(name).and_then(scalar).ok_or_else(|| EvalError::Parse {
                line: line_no,
                message: alloc::format!("missing or non-scalar field `{name}`"),
            })
        };
        let raw_label = field(&format.label_field)?;
        let gold_label = match format.map_label(&raw_label) {
            Some(LabelMapping::Supported) => Label::Supported,
            Some(LabelMapping::Refuted) => Label::Refuted,
            Some(LabelMapping::Drop) => {
                dropped += 1;
                continue;
            }
            None => {
                return Err(EvalError::UnknownLabel {
                    line: line_no,
                    value: raw_label,
                })
            }
        };
        let evidence = format
            .evidence_field
            .as_ref()
            .and_then(|f| value.get(f.as_str()))
            .and_then(evidence_docs);
        records.push(DatasetRecord {
            id: field(&format.id_field)?,
            claim: field(&format.claim_field)?,
            gold_label,
            evidence_docs: evidence,
            source: format.name.clone(),
        });
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = records.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(EvalError::DuplicateId(w[0].id.clone()));
    }
    Ok(Dataset { records, dropped })
}
