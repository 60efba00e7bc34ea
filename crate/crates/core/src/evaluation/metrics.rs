use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

/// Binary confusion counts with MA as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Ma, Label::Ma) => self.tp += 1,
            (Label::Normal, Label::Ma) => self.fn_ += 1,
            (Label::Normal, Label::Normal) => self.tn += 1,
            (Label::Ma, Label::Normal) => self.fp += 1,
        }
    }
}

pub fn confusion(preds: &[Label], labels: &[Label]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: preds.len() });
    }
    if preds.is_empty() {
        return Err(Error::EmptyInput("prediction list"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in preds.iter().zip(labels) {
        cm.record(p, a);
    }
    Ok(cm)
}

/// The four ratios; `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub const NAMES: [&'static str; 4] = ["accuracy", "sensitivity", "specificity", "precision"];

    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        Self {
            accuracy: ratio(cm.tp + cm.tn, cm.total()),
            sensitivity: ratio(cm.tp, cm.positives()),
            specificity: ratio(cm.tn, cm.negatives()),
            precision: ratio(cm.tp, cm.tp + cm.fp),
        }
    }

    /// Values in [`Metrics::NAMES`] order.
    pub fn values(&self) -> [Option<f64>; 4] {
        [self.accuracy, self.sensitivity, self.specificity, self.precision]
    }

    /// `|accuracy - (sens P + spec N) / (P + N)|`, treating an undefined rate as
    /// zero since its weight is then zero too. `None` for an empty matrix.
    pub fn identity_residual(&self, cm: &ConfusionMatrix) -> Option<f64> {
        let acc = self.accuracy?;
        let (p, n) = (cm.positives() as f64, cm.negatives() as f64);
        let blended = (self.sensitivity.unwrap_or(0.0) * p + self.specificity.unwrap_or(0.0) * n) / (p + n);
        Some((acc - blended).abs())
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    Metrics::from_confusion(cm)
}

/// Percentage with at most two decimals and trailing zeros dropped, e.g.
/// `0.954 -> "95.4%"`; `None` renders as `n/a`.
pub fn format_percent(value: Option<f64>) -> String {
    match value {
        None => "n/a".to_string(),
        Some(v) => {
            let s = format!("{:.2}", v * 100.0);
            let s = s.trim_end_matches('0').trim_end_matches('.');
            format!("{s}%")
        }
    }
}

/// One table line: `name | acc | sens | spec | prec`.
pub fn format_table_row(name: &str, m: &Metrics) -> String {
    let cells: Vec<String> = m.values().into_iter().map(format_percent).collect();
    format!("{name} | {}", cells.join(" | "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_all_positive_tallies() {
        let ys: Vec<Label> = [Label::Ma; 5].into_iter().chain([Label::Normal; 5]).collect();
        assert_eq!(confusion(&ys, &ys).unwrap(), ConfusionMatrix { tp: 5, fn_: 0, tn: 5, fp: 0 });
        let all_ma = vec![Label::Ma; 10];
        assert_eq!(confusion(&all_ma, &ys).unwrap(), ConfusionMatrix { tp: 5, fn_: 0, tn: 0, fp: 5 });
        let m = metrics(&confusion(&ys, &ys).unwrap());
        assert_eq!(m.values(), [Some(1.0); 4]);
    }

    #[test]
    fn ninety_percent_case() {
        let m = metrics(&ConfusionMatrix { tp: 9, fn_: 1, tn: 9, fp: 1 });
        assert_eq!(m.values(), [Some(0.9); 4]);
    }

    #[test]
    fn zero_denominators_are_sentinels() {
        let m = metrics(&ConfusionMatrix { tp: 0, fn_: 0, tn: 4, fp: 1 });
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.precision, Some(0.0));
        assert_eq!(metrics(&ConfusionMatrix { tp: 0, fn_: 3, tn: 4, fp: 0 }).precision, None);
        assert_eq!(m.specificity, Some(0.8));
        assert_eq!(format_percent(m.sensitivity), "n/a");
    }

    #[test]
    fn length_mismatch_errors() {
        assert!(confusion(&[Label::Ma], &[]).is_err());
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn table_row_format() {
        let m = Metrics {
            accuracy: Some(0.9633),
            sensitivity: Some(0.9733),
            specificity: Some(0.954),
            precision: Some(0.9528),
        };
        assert_eq!(format_table_row("BOF+MLP", &m), "BOF+MLP | 96.33% | 97.33% | 95.4% | 95.28%");
        assert_eq!(format_percent(Some(1.0)), "100%");
        assert_eq!(format_percent(Some(0.0)), "0%");
    }
}
