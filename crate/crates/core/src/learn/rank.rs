//! Wrapper feature-subset search: best-first forward selection scored by
//! random-forest cross-validated accuracy.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::evaluate_cv;
use super::forest::ForestParams;
use super::model::ModelParams;
use super::{Dataset, ModelKind};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankParams {
    pub top_k: usize,
    /// Consecutive non-improving expansions before the search stops.
    pub stall_limit: usize,
    pub folds: usize,
    pub forest: ForestParams,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams {
            top_k: 5,
            stall_limit: 5,
            folds: 5,
            forest: ForestParams {
                n_trees: 25,
                ..ForestParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    pub column: usize,
    /// Merit of the selected subset right after this feature joined it.
    pub merit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub features: Vec<RankedFeature>,
    /// Merit of the empty subset (majority-class rate).
    pub baseline: f64,
    pub best_merit: f64,
    /// Full best subset in acceptance order.
    pub best_subset: Vec<usize>,
    pub evaluated: usize,
}

/// Cross-validated random-forest accuracy using only `subset`'s columns.
/// The empty subset scores the majority-class rate.
pub fn subset_merit(
    data: &Dataset,
    subset: &[usize],
    params: &RankParams,
    seed: u64,
) -> Result<f64> {
    if subset.is_empty() {
        let counts = data.class_counts();
        let max = counts.iter().copied().max().unwrap_or(0);
        return Ok(max as f64 / data.len().max(1) as f64);
    }
    let mut cols = subset.to_vec();
    cols.sort_unstable();
    let view = data.select_columns(&cols);
    let model_params = ModelParams {
        forest: params.forest.clone(),
        ..ModelParams::default()
    };
    let k = params.folds.min(data.len());
    let report = evaluate_cv(ModelKind::RandomForest, &view, k, seed, &model_params)?;
    Ok(report.pooled.accuracy)
}

struct Node {
    /// Columns in acceptance order.
    order: Vec<usize>,
    merits: Vec<f64>,
    key: Vec<usize>,
    merit: f64,
}

fn key_of(order: &[usize]) -> Vec<usize> {
    let mut k = order.to_vec();
    k.sort_unstable();
    k
}

/// Greedy best-first forward search. Each expansion adds every unused column
/// to the most promising open subset; a subset only replaces the incumbent if
/// its merit is strictly higher, so among equal merits the earlier column
/// (and earlier expansion) wins.
pub fn rank_features(
    data: &Dataset,
    evaluator_seed: u64,
    params: &RankParams,
) -> Result<FeatureRanking> {
    data.validate()?;
    let d = data.width();
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut visited: HashSet<Vec<usize>> = HashSet::new();

    let baseline = subset_merit(data, &[], params, evaluator_seed)?;
    visited.insert(Vec::new());
    let mut open = vec![Node {
        order: Vec::new(),
        merits: Vec::new(),
        key: Vec::new(),
        merit: baseline,
    }];
    let mut best = (Vec::<usize>::new(), Vec::<f64>::new(), baseline);
    let mut stall = 0;

    while !open.is_empty() {
        let pick = select(&open);
        let node = open.swap_remove(pick);

        let candidates: Vec<Vec<usize>> = (0..d)
            .filter(|j| !node.key.contains(j))
            .map(|j| {
                let mut order = node.order.clone();
                order.push(j);
                order
            })
            .filter(|order| visited.insert(key_of(order)))
            .collect();
        let fresh: Vec<Vec<usize>> = candidates
            .iter()
            .map(|o| key_of(o))
            .filter(|k| !cache.contains_key(k))
            .collect();
        let scored = fresh
            .par_iter()
            .map(|k| subset_merit(data, k, params, evaluator_seed).map(|m| (k.clone(), m)))
            .collect::<Result<Vec<_>>>()?;
        cache.extend(scored);

        let mut improved = false;
        for order in candidates {
            let key = key_of(&order);
            let merit = cache[&key];
            let mut merits = node.merits.clone();
            merits.push(merit);
            if merit > best.2 {
                best = (order.clone(), merits.clone(), merit);
                improved = true;
            }
            open.push(Node {
                order,
                merits,
                key,
                merit,
            });
        }
        if improved {
            stall = 0;
        } else {
            stall += 1;
            if stall >= params.stall_limit {
                break;
            }
        }
    }

    let (order, merits, best_merit) = best;
    let features = order
        .iter()
        .zip(&merits)
        .take(params.top_k)
        .map(|(&j, &m)| RankedFeature {
            name: data.column_names[j].clone(),
            column: j,
            merit: m,
        })
        .collect();
    Ok(FeatureRanking {
        features,
        baseline,
        best_merit,
        best_subset: order,
        evaluated: cache.len() + 1,
    })
}

/// Highest merit first; ties go to the subset with the smaller sorted column
/// list.
fn select(open: &[Node]) -> usize {
    let mut best = 0;
    for (i, n) in open.iter().enumerate().skip(1) {
        let b = &open[best];
        if n.merit > b.merit || (n.merit == b.merit && n.key < b.key) {
            best = i;
        }
    }
    best
}
