use serde::{Deserialize, Serialize};

use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ContingencyTable {
    /// Counts `(is_positive, predicted_positive)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut t = ContingencyTable::default();
        for pair in pairs {
            match pair {
                (true, true) => t.tp += 1,
                (false, true) => t.fp += 1,
                (true, false) => t.fn_ += 1,
                (false, false) => t.tn += 1,
            }
        }
        t
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Contingency cells filled with posterior probability mass instead of
/// counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SoftContingencyTable {
    pub tp: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub tn: f64,
}

impl SoftContingencyTable {
    /// Builds the table from `(positive posterior, is_positive)` pairs.
    pub fn from_posteriors(
        items: impl IntoIterator<Item = (f64, bool)>,
    ) -> Result<Self, EvalError> {
        let mut t = SoftContingencyTable::default();
        for (p, positive) in items {
            if !(0.0..=1.0).contains(&p) {
                return Err(EvalError::InvalidPosterior(p));
            }
            if positive {
                t.tp += p;
                t.fn_ += 1.0 - p;
            } else {
                t.fp += p;
                t.tn += 1.0 - p;
            }
        }
        Ok(t)
    }
}

fn f1_cells(tp: f64, fp: f64, fn_: f64) -> f64 {
    let denom = 2.0 * tp + fp + fn_;
    if denom == 0.0 {
        1.0
    } else {
        2.0 * tp / denom
    }
}

/// 2·TP / (2·TP + FP + FN); 1.0 when there is nothing to find and nothing
/// was flagged.
pub fn f1(table: &ContingencyTable) -> f64 {
    f1_cells(table.tp as f64, table.fp as f64, table.fn_ as f64)
}

pub fn f1_soft(table: &SoftContingencyTable) -> f64 {
    f1_cells(table.tp, table.fp, table.fn_)
}

/// F1 over probability masses, from `(positive posterior, is_positive)`.
pub fn soft_f1(items: impl IntoIterator<Item = (f64, bool)>) -> Result<f64, EvalError> {
    Ok(f1_soft(&SoftContingencyTable::from_posteriors(items)?))
}

pub fn vanilla_accuracy(table: &ContingencyTable) -> Result<f64, EvalError> {
    match table.total() {
        0 => Err(EvalError::EmptyTable),
        n => Ok((table.tp + table.tn) as f64 / n as f64),
    }
}

/// Unweighted mean of per-class (one-vs-rest) F1.
pub fn macro_f1(tables: &[ContingencyTable]) -> Result<f64, EvalError> {
    if tables.is_empty() {
        return Err(EvalError::NoClasses);
    }
    Ok(tables.iter().map(f1).sum::<f64>() / tables.len() as f64)
}
