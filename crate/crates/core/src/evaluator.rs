//! Confusion matrix, per-class precision/recall/F1 and the classification
//! report.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::UrlClass;

const K: usize = UrlClass::COUNT;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no samples to evaluate")]
    Empty,
}

/// `counts[actual][predicted]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn record(&mut self, actual: UrlClass, predicted: UrlClass) {
        self.counts[actual.code()][predicted.code()] += 1;
    }

    pub fn get(&self, actual: UrlClass, predicted: UrlClass) -> u64 {
        self.counts[actual.code()][predicted.code()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..K).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sum(&self, class: UrlClass) -> u64 {
        self.counts[class.code()].iter().sum()
    }

    pub fn col_sum(&self, class: UrlClass) -> u64 {
        self.counts.iter().map(|row| row[class.code()]).sum()
    }
}

/// Tallies `(actual, predicted)` pairs.
pub fn confusion(pairs: &[(UrlClass, UrlClass)]) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for &(a, p) in pairs {
        cm.record(a, p);
    }
    cm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    /// Indexed by class code.
    pub per_class: [ClassMetrics; K],
    pub accuracy: f64,
}

impl EvalReport {
    pub fn class(&self, class: UrlClass) -> &ClassMetrics {
        &self.per_class[class.code()]
    }

    pub fn to_json(&self) -> serde_json::Value {
        let classes: serde_json::Map<String, serde_json::Value> = UrlClass::ALL
            .iter()
            .map(|c| {
                (
                    c.name().to_string(),
                    serde_json::to_value(self.class(*c)).unwrap(),
                )
            })
            .collect();
        serde_json::json!({
            "accuracy": self.accuracy,
            "per_class": classes,
            "confusion": self.confusion.counts,
            "total": self.confusion.total(),
        })
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 per class plus accuracy. Undefined ratios are 0.
pub fn metrics(cm: &ConfusionMatrix) -> Result<EvalReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let per_class = UrlClass::ALL.map(|c| {
        let tp = cm.get(c, c);
        let precision = ratio(tp, cm.col_sum(c));
        let recall = ratio(tp, cm.row_sum(c));
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: cm.row_sum(c),
        }
    });
    Ok(EvalReport {
        confusion: *cm,
        per_class,
        accuracy: ratio(cm.trace(), total),
    })
}

fn title(class: UrlClass) -> String {
    let name = class.name();
    name[..1].to_ascii_uppercase() + &name[1..]
}

/// Fixed-width text table: one row per class, then accuracy.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12}{:>10}{:>10}{:>10}",
        "Class", "Precision", "Recall", "F1-Score"
    );
    let _ = writeln!(out, "{}", "-".repeat(42));
    for c in UrlClass::ALL {
        let m = report.class(c);
        let _ = writeln!(
            out,
            "{:<12}{:>10.2}{:>10.2}{:>10.2}",
            title(c),
            m.precision,
            m.recall,
            m.f1
        );
    }
    let _ = writeln!(out, "{}", "-".repeat(42));
    let _ = writeln!(out, "{:<12}{:>30.2}", "Accuracy", report.accuracy);
    out
}

/// Confusion matrix as a fixed-width grid, rows actual, columns predicted.
pub fn render_confusion(cm: &ConfusionMatrix) -> String {
    let mut out = format!("{:<12}", "actual\\pred");
    for c in UrlClass::ALL {
        let _ = write!(out, "{:>12}", c.name());
    }
    out.push('\n');
    for a in UrlClass::ALL {
        let _ = write!(out, "{:<12}", a.name());
        for p in UrlClass::ALL {
            let _ = write!(out, "{:>12}", cm.get(a, p));
        }
        out.push('\n');
    }
    out
}
