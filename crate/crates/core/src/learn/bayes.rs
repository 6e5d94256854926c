//! Naive Bayes with Gaussian likelihoods for scaled columns and Bernoulli
//! likelihoods for binary and one-hot columns.

use crate::featurize::EncodedKind;
use serde::{Deserialize, Serialize};

/// Laplace smoothing for Bernoulli columns.
const ALPHA: f64 = 1.0;
/// Variance floor, relative to the largest column variance.
const VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ColumnModel {
    Gaussian { mean: [f64; 2], var: [f64; 2] },
    Bernoulli { p1: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    log_prior: [f64; 2],
    columns: Vec<ColumnModel>,
}

impl NaiveBayes {
    /// Requires both classes present in `y`.
    pub fn fit(x: &[Vec<f64>], y: &[u8], kinds: &[EncodedKind]) -> Self {
        let n = y.len() as f64;
        let counts = [y.iter().filter(|&&l| l == 0).count() as f64, y.iter().filter(|&&l| l == 1).count() as f64];
        let log_prior = [(counts[0] / n).ln(), (counts[1] / n).ln()];

        let overall_var = |j: usize| {
            let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
            x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n
        };
        let max_var = (0..kinds.len()).map(overall_var).fold(0.0, f64::max);
        let eps = (VAR_SMOOTHING * max_var).max(1e-12);

        let columns = kinds
            .iter()
            .enumerate()
            .map(|(j, kind)| {
                let mut sum = [0.0; 2];
                for (r, &l) in x.iter().zip(y) {
                    sum[usize::from(l)] += r[j];
                }
                match kind {
                    EncodedKind::Scaled => {
                        let mean = [sum[0] / counts[0], sum[1] / counts[1]];
                        let mut sq = [0.0; 2];
                        for (r, &l) in x.iter().zip(y) {
                            let c = usize::from(l);
                            sq[c] += (r[j] - mean[c]).powi(2);
                        }
                        ColumnModel::Gaussian {
                            mean,
                            var: [sq[0] / counts[0] + eps, sq[1] / counts[1] + eps],
                        }
                    }
                    EncodedKind::Binary | EncodedKind::OneHot => ColumnModel::Bernoulli {
                        p1: [
                            (sum[0] + ALPHA) / (counts[0] + 2.0 * ALPHA),
                            (sum[1] + ALPHA) / (counts[1] + 2.0 * ALPHA),
                        ],
                    },
                }
            })
            .collect();
        NaiveBayes { log_prior, columns }
    }

    fn joint_log_likelihood(&self, row: &[f64]) -> [f64; 2] {
        let mut out = self.log_prior;
        for (col, &v) in self.columns.iter().zip(row) {
            for (c, acc) in out.iter_mut().enumerate() {
                *acc += match col {
                    ColumnModel::Gaussian { mean, var } => {
                        -0.5 * (2.0 * std::f64::consts::PI * var[c]).ln() - (v - mean[c]).powi(2) / (2.0 * var[c])
                    }
                    ColumnModel::Bernoulli { p1 } => {
                        if v >= 0.5 {
                            p1[c].ln()
                        } else {
                            (1.0 - p1[c]).ln()
                        }
                    }
                };
            }
        }
        out
    }

    /// Normalized class-1 posterior.
    pub fn score(&self, row: &[f64]) -> f64 {
        let [l0, l1] = self.joint_log_likelihood(row);
        let m = l0.max(l1);
        let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
        e1 / (e0 + e1)
    }
}
