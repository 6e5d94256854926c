//! CART trees with Gini impurity and a bagged random forest.

use super::{rng_for, Stream};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_split: usize,
    /// `None` uses `round(sqrt(n_features))`, at least 1.
    pub features_per_split: Option<usize>,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            n_trees: 100,
            max_depth: None,
            min_split: 2,
            features_per_split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Fraction of class-1 rows that reached the leaf during training.
        p1: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    root: Node,
}

impl Tree {
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { p1 } => return *p1,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }

    /// Hard vote: class 1 when at least half of the leaf was class 1.
    pub fn vote(&self, row: &[f64]) -> u8 {
        u8::from(self.score(row) >= 0.5)
    }

    pub fn depth(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    /// Grows a tree on `rows` (indices into `x`, repeats allowed).
    pub fn fit(x: &[Vec<f64>], y: &[u8], rows: &[usize], params: &RfParams, mtry: usize, rng: &mut ChaCha8Rng) -> Tree {
        let n_features = x.first().map_or(0, Vec::len);
        let mut builder = Builder {
            x,
            y,
            params,
            mtry: mtry.clamp(1, n_features.max(1)),
            n_features,
            rng,
        };
        let mut rows = rows.to_vec();
        Tree {
            root: builder.grow(&mut rows, 0),
        }
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    params: &'a RfParams,
    mtry: usize,
    n_features: usize,
    rng: &'a mut ChaCha8Rng,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

impl Builder<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> Node {
        let n = rows.len();
        let pos = rows.iter().filter(|&&r| self.y[r] == 1).count();
        let leaf = Node::Leaf {
            p1: if n == 0 { 0.0 } else { pos as f64 / n as f64 },
        };
        if pos == 0 || pos == n || n < self.params.min_split || self.params.max_depth.is_some_and(|d| depth >= d) {
            return leaf;
        }
        let Some((feature, threshold)) = self.best_split(rows, pos) else {
            return leaf;
        };
        let mid = partition(rows, |r| self.x[r][feature] <= threshold);
        let (l, r) = rows.split_at_mut(mid);
        Node::Split {
            feature,
            threshold,
            left: Box::new(self.grow(l, depth + 1)),
            right: Box::new(self.grow(r, depth + 1)),
        }
    }

    /// Examines features in random order until `mtry` non-constant ones
    /// have been scored; the lowest weighted Gini wins, first found on ties.
    fn best_split(&mut self, rows: &[usize], pos: usize) -> Option<(usize, f64)> {
        let n = rows.len();
        let mut features: Vec<usize> = (0..self.n_features).collect();
        features.shuffle(self.rng);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut scored = 0;
        let mut values: Vec<(f64, u8)> = Vec::with_capacity(n);
        for f in features {
            if scored >= self.mtry {
                break;
            }
            values.clear();
            values.extend(rows.iter().map(|&r| (self.x[r][f], self.y[r])));
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            if values[0].0 == values[n - 1].0 {
                continue;
            }
            scored += 1;
            let mut left_pos = 0;
            for i in 0..n - 1 {
                left_pos += usize::from(values[i].1 == 1);
                if values[i].0 == values[i + 1].0 {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                let impurity = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(pos - left_pos, nr)) / n as f64;
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    let threshold = values[i].0 + (values[i + 1].0 - values[i].0) / 2.0;
                    best = Some((impurity, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Stable-order-agnostic in-place partition; returns the count satisfying `pred`.
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut mid = 0;
    for i in 0..rows.len() {
        if pred(rows[i]) {
            rows.swap(i, mid);
            mid += 1;
        }
    }
    mid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<Tree>,
}

impl RandomForest {
    /// Each tree draws a bootstrap sample and its own RNG from
    /// `(seed, tree index)`, so the result does not depend on scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[u8], params: &RfParams, seed: u64) -> Self {
        let n = y.len();
        let n_features = x.first().map_or(0, Vec::len);
        let mtry = params
            .features_per_split
            .unwrap_or_else(|| ((n_features as f64).sqrt().round() as usize).max(1));
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(seed, Stream::Tree, t as u64);
                let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                Tree::fit(x, y, &rows, params, mtry, &mut rng)
            })
            .collect();
        RandomForest { trees }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn votes(&self, row: &[f64]) -> Vec<u8> {
        self.trees.iter().map(|t| t.vote(row)).collect()
    }

    /// Fraction of trees voting for class 1.
    pub fn score(&self, row: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        self.trees.iter().map(|t| f64::from(t.vote(row))).sum::<f64>() / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn single_tree_separates_threshold_data() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let rows: Vec<usize> = (0..20).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = Tree::fit(&x, &y, &rows, &RfParams::default(), 1, &mut rng);
        assert_eq!(t.depth(), 1);
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(t.vote(row), label);
        }
    }

    #[test]
    fn respects_max_depth_and_constant_features() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, (i % 4) as f64]).collect();
        let y: Vec<u8> = (0..8).map(|i| u8::from(i % 4 == 1 || i % 4 == 2)).collect();
        let rows: Vec<usize> = (0..8).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = RfParams {
            max_depth: Some(1),
            ..Default::default()
        };
        let t = Tree::fit(&x, &y, &rows, &p, 1, &mut rng);
        assert_eq!(t.depth(), 1);
        let full = Tree::fit(&x, &y, &rows, &RfParams::default(), 1, &mut rng);
        assert!(rows.iter().all(|&r| full.vote(&x[r]) == y[r]));
    }
}
