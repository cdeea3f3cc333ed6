//! Seeded k-fold splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Folds {
    /// Test indices of each fold, sorted ascending.
    pub folds: Vec<Vec<usize>>,
    pub stratified: bool,
}

impl Folds {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Indices outside fold `i`, ascending.
    pub fn train_indices(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

fn check(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds sample count {n}"
        )));
    }
    Ok(())
}

/// Deals an ordering round-robin into `k` folds.
fn deal(order: impl IntoIterator<Item = usize>, k: usize) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

pub fn kfold_split_unstratified(n: usize, k: usize, seed: u64) -> Result<Folds> {
    check(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(Folds {
        folds: deal(order, k),
        stratified: false,
    })
}

/// Stratified split: each class is shuffled and the classes are laid end to
/// end before dealing, so every fold's size and every fold's per-class count
/// differ from the others by at most one.
///
/// Falls back to an unstratified split when a class has fewer than `k`
/// members.
pub fn kfold_split(labels: &[usize], k: usize, seed: u64) -> Result<Folds> {
    check(labels.len(), k)?;
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    if by_class
        .iter()
        .any(|members| !members.is_empty() && members.len() < k)
    {
        log::warn!("a class has fewer than {k} members; falling back to unstratified folds");
        return kfold_split_unstratified(labels.len(), k, seed);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for members in &mut by_class {
        members.shuffle(&mut rng);
    }
    Ok(Folds {
        folds: deal(by_class.into_iter().flatten(), k),
        stratified: true,
    })
}
