//! CART classification trees (Gini impurity) and bagged random forests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: None,
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

/// Gini impurity of a class histogram holding `n` samples.
pub fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [usize],
    n_classes: usize,
    mtry: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &i in idx.iter() {
            counts[self.labels[i]] += 1;
        }
        let majority = majority(&counts);
        let node_id = self.nodes.len();
        self.nodes.push(Node::Leaf { class: majority });

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_done = self.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_done || idx.len() < 2 * self.min_leaf {
            return node_id;
        }
        let Some(split) = self.best_split(idx, &counts, rng) else {
            return node_id;
        };

        let col = &self.columns[split.feature];
        let mid = partition(idx, |i| col[i] <= split.threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[node_id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        node_id
    }

    /// Samples `mtry` features; if none of them separates the node, keeps
    /// drawing from the rest until one does.
    fn best_split(
        &self,
        idx: &[usize],
        counts: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Option<SplitChoice> {
        let d = self.columns.len();
        let mut features: Vec<usize> = (0..d).collect();
        features.shuffle(rng);

        let mut best: Option<SplitChoice> = None;
        let mut order = idx.to_vec();
        for (tried, &f) in features.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            let col = &self.columns[f];
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            if let Some(cand) = self.scan(f, col, &order, counts) {
                if best.as_ref().is_none_or(|b| cand.impurity < b.impurity) {
                    best = Some(cand);
                }
            }
        }
        best
    }

    fn scan(
        &self,
        feature: usize,
        col: &[f64],
        order: &[usize],
        counts: &[usize],
    ) -> Option<SplitChoice> {
        let n = order.len();
        let mut left = vec![0usize; self.n_classes];
        let mut right = counts.to_vec();
        let mut best: Option<SplitChoice> = None;
        for pos in 0..n - 1 {
            let y = self.labels[order[pos]];
            left[y] += 1;
            right[y] -= 1;
            let (nl, nr) = (pos + 1, n - pos - 1);
            if nl < self.min_leaf || nr < self.min_leaf {
                continue;
            }
            let (a, b) = (col[order[pos]], col[order[pos + 1]]);
            if a == b {
                continue;
            }
            let impurity = nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr);
            if best.as_ref().is_none_or(|s| impurity < s.impurity) {
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(SplitChoice {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
        best
    }
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

/// Stable in-place partition; returns the number of elements satisfying `pred`.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| pred(i));
    let mid = yes.len();
    for (slot, v) in idx.iter_mut().zip(yes.into_iter().chain(no)) {
        *slot = v;
    }
    mid
}

impl DecisionTree {
    /// Grows a tree on the samples `idx` (repeats allowed) of column-major data.
    pub fn fit(
        columns: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
        idx: &[usize],
        params: &ForestParams,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let d = columns.len();
        let mtry = params
            .max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d.max(1));
        let mut grower = Grower {
            columns,
            labels,
            n_classes,
            mtry,
            max_depth: params.max_depth,
            min_leaf: params.min_samples_leaf.max(1),
            nodes: Vec::new(),
        };
        let mut idx = idx.to_vec();
        grower.grow(&mut idx, 0, rng);
        DecisionTree {
            nodes: grower.nodes,
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_classes: usize,
    n_features: usize,
}

impl RandomForest {
    /// Each tree sees a bootstrap sample and its own RNG stream derived from
    /// `seed` and the tree index, so the result does not depend on scheduling.
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
        params: &ForestParams,
        seed: u64,
    ) -> Self {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let columns: Vec<Vec<f64>> = (0..d)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        let trees = (0..params.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                DecisionTree::fit(&columns, labels, n_classes, &sample, params, &mut rng)
            })
            .collect();
        RandomForest {
            trees,
            n_classes,
            n_features: d,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Fraction of trees voting for each class.
    pub fn vote_fractions(&self, row: &[f64]) -> Vec<f64> {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(row)] += 1;
        }
        let n = self.trees.len() as f64;
        votes.into_iter().map(|v| v as f64 / n).collect()
    }
}
