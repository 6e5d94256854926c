//! Confusion counts and per-class / macro Precision, Recall and F1.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn from_predictions(truth: &[u8], predicted: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (1, 0) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        c
    }

    /// The same counts seen from class 0.
    pub fn flipped(self) -> Self {
        Confusion {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    pub fn metrics(self) -> ClassMetrics {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        ClassMetrics {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }

    /// Metrics for class 0 and class 1, in that order.
    pub fn per_class(self) -> [ClassMetrics; 2] {
        [self.flipped().metrics(), self.metrics()]
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    /// Unweighted mean of each metric.
    pub fn mean(items: &[ClassMetrics]) -> ClassMetrics {
        let n = items.len().max(1) as f64;
        ClassMetrics {
            precision: items.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: items.iter().map(|m| m.recall).sum::<f64>() / n,
            f1: items.iter().map(|m| m.f1).sum::<f64>() / n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_confusion_matrix() {
        let c = Confusion { tp: 2, fp: 1, fn_: 1, tn: 6 };
        let [neg, pos] = c.per_class();
        assert_eq!(pos.precision, 2.0 / 3.0);
        assert_eq!(pos.recall, 2.0 / 3.0);
        assert!((pos.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(neg.precision, 6.0 / 7.0);
        assert_eq!(neg.recall, 6.0 / 7.0);
        let macro_f1 = ClassMetrics::mean(&[neg, pos]).f1;
        assert!((macro_f1 - (2.0 / 3.0 + 6.0 / 7.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_denominators() {
        let c = Confusion { tp: 0, fp: 0, fn_: 3, tn: 3 };
        assert_eq!(c.metrics(), ClassMetrics::default());
        assert_eq!(f1(0.0, 0.0), 0.0);
    }
}
