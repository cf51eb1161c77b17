//! Benchmark loading, binary label standardization, balanced accuracy and
//! the failure taxonomy.

mod dataset;
mod metrics;
mod report;
mod taxonomy;

use alloc::string::String;
use thiserror::Error;

pub use dataset::{default_label_mapping, load_dataset, Dataset, DatasetFormat, DatasetRecord, LabelMapping};
pub use metrics::{balanced_accuracy, per_class_recall};
pub use report::{aggregate, run_benchmark, EvalReport, MeanCounters, RecordOutcome};
pub use taxonomy::{classify_error, ErrorClass};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown label `{value}`")]
    UnknownLabel { line: usize, value: String },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("no records")]
    EmptyRecords,
    #[error("{predictions} predictions for {golds} gold labels")]
    LengthMismatch { predictions: usize, golds: usize },
    #[error("gold labels contain a single class")]
    SingleClassGold,
}
