#![allow(dead_code)]

use chrono::Duration;
use collusion_kit::corpus::{build_collection, Collection, TweetStore};
use collusion_kit::learn::{subset_merit, Dataset, RankParams, Task};
use collusion_kit::pipeline::{extract_row, ExtractParams};
use collusion_kit::sentiment::LexiconScorer;
use collusion_kit::summarization::{FeatureRow, FeatureSchema};
use collusion_kit::synth::{
    generate_collection, oracle_extract, BehaviorKind, BehaviorProfile, SyntheticCorpus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const REL_TOL: f64 = 1e-9;
pub const ABS_FLOOR: f64 = 1e-12;

pub fn close(a: f64, b: f64) -> bool {
    let diff = (a - b).abs();
    diff <= REL_TOL * a.abs().max(b.abs()) || diff <= ABS_FLOOR
}

pub fn synthetic(kind: BehaviorKind, users: usize, tag: &str, seed: u64) -> SyntheticCorpus {
    let mut p = BehaviorProfile::for_kind(kind);
    p.users = users;
    generate_collection(&p, tag, seed).unwrap()
}

pub fn collect(corpus: &SyntheticCorpus) -> (TweetStore, Collection) {
    let store = TweetStore::from_records(corpus.tweets.clone(), corpus.profiles.clone());
    let c = build_collection(&store, &corpus.traced_tag, 7)
        .unwrap()
        .with_label(corpus.label);
    (store, c)
}

/// Main-pipeline row and oracle row for one collection, one-hour slices.
pub fn both_rows(store: &TweetStore, c: &Collection) -> (FeatureRow, FeatureRow) {
    let schema = FeatureSchema::default();
    let scorer = LexiconScorer::default();
    let today = store.max_timestamp().unwrap().date_naive();
    let params = ExtractParams {
        today,
        interval: Duration::hours(1),
        schema: &schema,
        scorer: &scorer,
    };
    let main = extract_row(c, &params).unwrap();
    let oracle = oracle_extract(c, today, &schema, 3600, &scorer);
    (main, oracle)
}

/// Names of columns whose values disagree.
pub fn mismatches(a: &FeatureRow, b: &FeatureRow) -> Vec<String> {
    assert_eq!(a.columns, b.columns, "column layouts differ");
    a.columns
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .filter(|(_, (x, y))| !close(**x, **y))
        .map(|(n, (x, y))| format!("{n}: {x} vs {y}"))
        .collect()
}

/// Exhaustive search over every non-empty subset of a small dataset.
pub fn exhaustive_best(d: &Dataset, params: &RankParams, seed: u64) -> f64 {
    let w = d.width();
    let mut best = subset_merit(d, &[], params, seed).unwrap();
    for mask in 1u32..(1 << w) {
        let subset: Vec<usize> = (0..w).filter(|j| mask & (1 << j) != 0).collect();
        best = best.max(subset_merit(d, &subset, params, seed).unwrap());
    }
    best
}

pub fn toy(width: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..width).map(|_| rng.gen_range(0..6) as f64).collect())
        .collect();
    // Label mostly follows the first two columns, with a little noise.
    let labels = rows
        .iter()
        .map(|r| usize::from(r[0] + r[1 % width] > 5.0) ^ usize::from(rng.gen_bool(0.1)))
        .collect();
    let names = (0..width).map(|j| format!("c{j}")).collect();
    Dataset::new(
        rows,
        names,
        vec![false; width],
        labels,
        Task::OrganicVsOrganized,
    )
    .unwrap()
}
