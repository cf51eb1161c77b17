use alloc::collections::BTreeMap;

use super::EvalError;
use crate::agent::Label;

/// Recall of each gold class.
pub fn per_class_recall(predictions: &[Label], golds: &[Label]) -> BTreeMap<Label, f64> {
    let mut hits: BTreeMap<Label, (usize, usize)> = BTreeMap::new();
    for (p, g) in predictions.iter().zip(golds) {
        let e = hits.entry(*g).or_insert((0, 0));
        e.1 += 1;
        if p == g {
            e.0 += 1;
        }
    }
    hits.into_iter().map(|(l, (h, n))| (l, h as f64 / n as f64)).collect()
}

/// Arithmetic mean of the per-class recalls over both gold classes.
pub fn balanced_accuracy(predictions: &[Label], golds: &[Label]) -> Result<f64, EvalError> {
    if predictions.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            golds: golds.len(),
        });
    }
    if golds.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    let recalls = per_class_recall(predictions, golds);
    if recalls.len() < 2 {
        return Err(EvalError::SingleClassGold);
    }
    Ok(recalls.values().sum::<f64>() / recalls.len() as f64)
}
