use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::dataset::DatasetRecord;
use super::metrics::{balanced_accuracy, per_class_recall};
use super::taxonomy::{classify_error, ErrorClass};
use super::EvalError;
use crate::agent::{Counters, Label, Trajectory};

/// Per-record result of a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub id: String,
    pub gold: Label,
    pub predicted: Option<Label>,
    pub forced: bool,
    pub flags: Vec<ErrorClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counters: Option<Counters>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RecordOutcome {
    pub fn from_episode(record: &DatasetRecord, result: Result<&Trajectory, String>) -> Self {
        match result {
            Ok(t) => {
                let predicted = t.label();
                let correct = predicted == Some(record.gold_label);
                Self {
                    id: record.id.clone(),
                    gold: record.gold_label,
                    predicted,
                    forced: t.verdict.as_ref().is_some_and(|v| v.forced),
                    flags: classify_error(t, correct),
                    counters: Some(t.counters.clone()),
                    error: None,
                }
            }
            Err(message) => Self {
                id: record.id.clone(),
                gold: record.gold_label,
                predicted: None,
                forced: false,
                flags: Vec::new(),
                counters: None,
                error: Some(message),
            },
        }
    }

    pub fn is_correct(&self) -> bool {
        self.predicted == Some(self.gold)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanCounters {
    pub llm_calls: f64,
    pub bounded_llm_calls: f64,
    pub sparql_queries: f64,
    pub web_searches: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Records submitted.
    pub n: usize,
    /// Records with a verdict.
    pub evaluated: usize,
    pub balanced_accuracy: Option<f64>,
    pub per_class_recall: BTreeMap<Label, f64>,
    pub incorrect: usize,
    pub forced_verdicts: usize,
    /// Each flag tallied independently; a record may raise several.
    pub error_counts: BTreeMap<ErrorClass, usize>,
    pub mean_counters: MeanCounters,
    /// `(id, message)` for records whose episode failed.
    pub errors: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Reduces per-record outcomes (in any order) to a report; outcomes are
/// sorted by id first so the result does not depend on completion order.
pub fn aggregate(outcomes: &[RecordOutcome]) -> Result<EvalReport, EvalError> {
    if outcomes.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    let mut sorted: Vec<&RecordOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let done: Vec<&RecordOutcome> = sorted.iter().copied().filter(|o| o.predicted.is_some()).collect();
    let preds: Vec<Label> = done.iter().filter_map(|o| o.predicted).collect();
    let golds: Vec<Label> = done.iter().map(|o| o.gold).collect();
    let (ba, note) = match balanced_accuracy(&preds, &golds) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut error_counts: BTreeMap<ErrorClass, usize> = ErrorClass::ALL.iter().map(|c| (*c, 0)).collect();
    for o in &done {
        for f in &o.flags {
            *error_counts.entry(*f).or_insert(0) += 1;
        }
    }
    let mut mean = MeanCounters::default();
    let with_counters: Vec<&Counters> = done.iter().filter_map(|o| o.counters.as_ref()).collect();
    if !with_counters.is_empty() {
        let n = with_counters.len() as f64;
        mean.llm_calls = with_counters.iter().map(|c| c.llm_calls as f64).sum::<f64>() / n;
        mean.bounded_llm_calls = with_counters.iter().map(|c| c.bounded_llm_calls as f64).sum::<f64>() / n;
        mean.sparql_queries = with_counters.iter().map(|c| c.sparql_queries as f64).sum::<f64>() / n;
        mean.web_searches = with_counters.iter().map(|c| c.web_searches as f64).sum::<f64>() / n;
    }
    Ok(EvalReport {
        n: outcomes.len(),
        evaluated: done.len(),
        balanced_accuracy: ba,
        per_class_recall: per_class_recall(&preds, &golds),
        incorrect: done.iter().filter(|o| !o.is_correct()).count(),
        forced_verdicts: done.iter().filter(|o| o.forced).count(),
        error_counts,
        mean_counters: mean,
        errors: sorted
            .iter()
            .filter_map(|o| o.error.as_ref().map(|e| (o.id.clone(), e.clone())))
            .collect(),
        note,
    })
}

/// Runs every record sequentially through `episode` and aggregates.
pub fn run_benchmark<F>(
    records: &[DatasetRecord],
    mut episode: F,
) -> Result<(EvalReport, Vec<RecordOutcome>), EvalError>
where
    F: FnMut(&DatasetRecord) -> Result<Trajectory, String>,
{
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    let outcomes: Vec<RecordOutcome> = records
        .iter()
        .map(|r| {
            let result = episode(r);
            RecordOutcome::from_episode(r, result.as_ref().map_err(Clone::clone))
        })
        .collect();
    Ok((aggregate(&outcomes)?, outcomes))
}
