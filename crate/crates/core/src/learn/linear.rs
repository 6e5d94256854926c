//! Logistic regression by full-batch gradient descent and a linear SVM by
//! full-batch hinge-loss subgradient descent.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        LrParams {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
    /// Step size at epoch 1; decays as `1 / sqrt(epoch)`.
    pub initial_step: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            epochs: 500,
            initial_step: 0.5,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    /// Positive-class probability through the logistic link.
    pub fn score(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }

    /// Minimizes mean log loss plus `l2/2 * |w|^2` (bias unpenalized).
    pub fn fit_logistic(x: &[Vec<f64>], y: &[u8], p: &LrParams) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = y.len() as f64;
        let mut m = LinearModel {
            weights: vec![0.0; d],
            bias: 0.0,
        };
        let mut grad = vec![0.0; d];
        for _ in 0..p.epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for (row, &label) in x.iter().zip(y) {
                let err = m.score(row) - f64::from(label);
                for (g, xi) in grad.iter_mut().zip(row) {
                    *g += err * xi;
                }
                grad_b += err;
            }
            for (w, g) in m.weights.iter_mut().zip(&grad) {
                *w -= p.learning_rate * (g / n + p.l2 * *w);
            }
            m.bias -= p.learning_rate * grad_b / n;
        }
        m
    }

    /// Minimizes `lambda/2 * |w|^2 + mean hinge` with `lambda = 1 / (C n)`,
    /// returning the iterate with the lowest objective.
    pub fn fit_svm(x: &[Vec<f64>], y: &[u8], p: &SvmParams) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = y.len() as f64;
        let lambda = 1.0 / (p.c * n);
        let signs: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let objective = |m: &LinearModel| {
            let hinge: f64 = x.iter().zip(&signs).map(|(r, s)| (1.0 - s * m.margin(r)).max(0.0)).sum();
            lambda / 2.0 * m.weights.iter().map(|w| w * w).sum::<f64>() + hinge / n
        };
        let mut m = LinearModel {
            weights: vec![0.0; d],
            bias: 0.0,
        };
        let mut best = (objective(&m), m.clone());
        let mut grad = vec![0.0; d];
        for epoch in 1..=p.epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for (row, &s) in x.iter().zip(&signs) {
                if s * m.margin(row) < 1.0 {
                    for (g, xi) in grad.iter_mut().zip(row) {
                        *g -= s * xi;
                    }
                    grad_b -= s;
                }
            }
            let step = p.initial_step / (epoch as f64).sqrt();
            for (w, g) in m.weights.iter_mut().zip(&grad) {
                *w -= step * (lambda * *w + g / n);
            }
            m.bias -= step * grad_b / n;
            let obj = objective(&m);
            if obj < best.0 {
                best = (obj, m.clone());
            }
        }
        best.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<Vec<f64>>, Vec<u8>) {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
        let y = (0..20).map(|i| u8::from(i >= 10)).collect();
        (x, y)
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!((sigmoid(800.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logistic_orders_separable_data() {
        let (x, y) = separable();
        let m = LinearModel::fit_logistic(&x, &y, &LrParams::default());
        assert!(m.weights[0] > 0.0);
        assert!(m.score(&[1.0]) > m.score(&[0.0]));
    }

    #[test]
    fn svm_separates() {
        let (x, y) = separable();
        let m = LinearModel::fit_svm(&x, &y, &SvmParams::default());
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(u8::from(m.margin(row) >= 0.0), label, "{row:?}");
        }
    }
}
