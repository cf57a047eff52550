//! Classification metrics, six-number summaries, the hyperparameter grid and
//! its CSV/SVG reports.

mod grid;
mod report;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::{Error, Result};

pub use grid::{
    config_seed, grid_search, marginal_report, Axis, ConfigKey, GridAxes, GridOptions, GridResult, MarginalRow,
};
pub use report::{
    emit_report, kde, results_from_csv, results_to_csv, top_configs, ReportFiles, BOXPLOT_FILE, DENSITY_FILE,
    MARGINALS_FILE, RESULTS_FILE, TOP_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    /// Counts `(predicted, gold)` pairs; pairs without a gold label are skipped.
    pub fn from_labels(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = ConfusionMatrix::default();
        for (pred, gold) in pairs {
            match (pred == Label::Positive, gold) {
                (true, Label::Positive) => c.tp += 1,
                (true, Label::Negative) => c.fp += 1,
                (false, Label::Negative) => c.tn += 1,
                (false, Label::Positive) => c.fn_ += 1,
                (_, Label::Unknown) => {}
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metrics(c: &ConfusionMatrix) -> Result<Metrics> {
    if c.total() == 0 {
        return Err(Error::invalid("metrics of an empty confusion matrix"));
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    Ok(Metrics {
        precision,
        recall,
        f_measure: f_measure(precision, recall),
        accuracy: ratio(c.tp + c.tn, c.total()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (`h = (n - 1) p`).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::invalid("summary of no values"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("summary of NaN values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}
