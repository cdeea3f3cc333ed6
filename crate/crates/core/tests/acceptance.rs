//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration as StdDuration, Instant};

use chrono::Duration;
use collusion_kit::corpus::{partition_intervals, TweetStore};
use collusion_kit::learn::{
    evaluate_cv, kfold_split, rank_features, roc_auc, ConfusionMatrix, Dataset, ForestParams,
    Metrics, ModelKind, ModelParams, Pca, RankParams, Task, Trainset, Variant,
};
use collusion_kit::pipeline::{extract_rows, ExtractParams};
use collusion_kit::sentiment::LexiconScorer;
use collusion_kit::summarization::FeatureSchema;
use collusion_kit::synth::{generate_batch, BatchSpec, BehaviorKind, BehaviorProfile};
use collusion_kit::temporal_features::extract_slice_features;
use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and thresholds.
const ORACLE_REL_TOL: f64 = 1e-9;
const ORACLE_BUDGET: StdDuration = StdDuration::from_secs(120);
const SEPARATION_BUDGET: StdDuration = StdDuration::from_secs(300);
const RF_MIN_ACCURACY: f64 = 0.90;
const RF_MIN_AUC: f64 = 0.95;
const LOGREG_PCA_MIN_ACCURACY: f64 = 0.85;
const ABLATION_MAX_LOSS: f64 = 0.05;
const CLOSED_FORM_TOL: f64 = 1e-12;
const RANDOM_AUC_TOL: f64 = 0.05;
const PCA_ORTHO_TOL: f64 = 1e-6;
const PCA_RECON_TOL: f64 = 1e-8;
const PROPERTY_CASES: u32 = 1000;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

/// Users needed for roughly `tweets` expanded tweets, from one calibration run.
fn users_for(kind: BehaviorKind, tweets: usize) -> usize {
    let p = BehaviorProfile::for_kind(kind);
    let (_, c) = collect(&synthetic(kind, p.users, "calib", 0));
    let per_user = c.expanded_tweets.len() as f64 / p.users as f64;
    ((tweets as f64 / per_user).round() as usize).max(1)
}

fn oracle_equivalence() -> Outcome {
    assert_eq!(ORACLE_REL_TOL, REL_TOL);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut smallest, mut largest, mut columns) = (usize::MAX, 0, 0);
    for i in 0..50u64 {
        let kind = if i % 2 == 0 {
            BehaviorKind::Organized
        } else {
            BehaviorKind::Organic
        };
        let target = rng.gen_range(300..=1800);
        let corpus = synthetic(kind, users_for(kind, target), &format!("acc{i}"), i);
        let (store, c) = collect(&corpus);
        smallest = smallest.min(c.expanded_tweets.len());
        largest = largest.max(c.expanded_tweets.len());
        let (main, oracle) = both_rows(&store, &c);
        let bad = mismatches(&main, &oracle);
        if !bad.is_empty() {
            return Err(format!(
                "collection {i}: {} columns differ, e.g. {}",
                bad.len(),
                bad[0]
            ));
        }
        columns += main.width();
    }
    let elapsed = start.elapsed();
    check(
        (200..=2000).contains(&smallest) && (200..=2000).contains(&largest) && elapsed < ORACLE_BUDGET,
        format!(
            "50 collections ({smallest}-{largest} tweets), {columns} columns agree within {ORACLE_REL_TOL:e}, {elapsed:.1?}"
        ),
        format!("sizes {smallest}-{largest}, elapsed {elapsed:.1?}"),
    )
}

struct Separation {
    rf_all: Metrics,
    rf_no_traced: Metrics,
    logreg_pca: Metrics,
    elapsed: StdDuration,
}

fn synthetic_separation() -> Result<Separation, String> {
    let start = Instant::now();
    let batch = generate_batch(&BatchSpec::default()).map_err(|e| e.to_string())?;
    let mut tweets = Vec::new();
    let mut profiles = Vec::new();
    let mut labels = BTreeMap::new();
    let mut tags = Vec::new();
    for c in batch {
        labels.insert(c.traced_tag.clone(), c.label);
        tags.push(c.traced_tag);
        tweets.extend(c.tweets);
        profiles.extend(c.profiles);
    }
    let store = TweetStore::from_records(tweets, profiles);
    let schema = FeatureSchema::default();
    let scorer = LexiconScorer::default();
    let params = ExtractParams {
        today: store.max_timestamp().unwrap().date_naive(),
        interval: Duration::hours(1),
        schema: &schema,
        scorer: &scorer,
    };
    let rows = extract_rows(&store, &tags, &labels, 7, &params).map_err(|e| e.to_string())?;
    let task = Task::OrganicVsOrganized;
    let cols = schema.columns();
    let base = Dataset::new(
        rows.iter().map(|r| r.values.clone()).collect(),
        cols.iter().map(|c| c.name.clone()).collect(),
        cols.iter().map(|c| c.traced).collect(),
        rows.iter()
            .map(|r| task.label_of(&r.labels).unwrap())
            .collect(),
        task,
    )
    .map_err(|e| e.to_string())?;

    let model_params = ModelParams::default();
    let cv = |variant: Variant, kind: ModelKind| -> Result<Metrics, String> {
        let ts =
            Trainset::build(&base, &schema.hash(), variant, 0.95).map_err(|e| e.to_string())?;
        let r = evaluate_cv(kind, &ts.data, 10, 42, &model_params).map_err(|e| e.to_string())?;
        Ok(r.pooled)
    };
    let rf_all = cv(Variant::All, ModelKind::RandomForest)?;
    let logreg_pca = cv(Variant::Pca, ModelKind::LogisticRegression)?;
    let elapsed = start.elapsed();
    let rf_no_traced = cv(Variant::NoTraced, ModelKind::RandomForest)?;
    Ok(Separation {
        rf_all,
        rf_no_traced,
        logreg_pca,
        elapsed,
    })
}

fn separation_outcome(s: &Result<Separation, String>) -> Outcome {
    let s = s.as_ref().map_err(Clone::clone)?;
    let auc = s.rf_all.roc_auc.unwrap_or(0.0);
    let msg = format!(
        "RF accuracy {:.3} (>= {RF_MIN_ACCURACY}), AUC {auc:.3} (>= {RF_MIN_AUC}); LogReg/PCA accuracy {:.3} (>= {LOGREG_PCA_MIN_ACCURACY}); {:.1?}",
        s.rf_all.accuracy, s.logreg_pca.accuracy, s.elapsed
    );
    check(
        s.rf_all.accuracy >= RF_MIN_ACCURACY
            && auc >= RF_MIN_AUC
            && s.logreg_pca.accuracy >= LOGREG_PCA_MIN_ACCURACY
            && s.elapsed < SEPARATION_BUDGET,
        msg.clone(),
        msg,
    )
}

fn ablation_outcome(s: &Result<Separation, String>) -> Outcome {
    let s = s.as_ref().map_err(Clone::clone)?;
    let loss = s.rf_all.accuracy - s.rf_no_traced.accuracy;
    let msg = format!(
        "RF accuracy {:.3} with traced features, {:.3} without (loss {loss:.3}, limit {ABLATION_MAX_LOSS})",
        s.rf_all.accuracy, s.rf_no_traced.accuracy
    );
    check(loss <= ABLATION_MAX_LOSS, msg.clone(), msg)
}

fn metrics_correctness() -> Outcome {
    let m = Metrics::from_confusion(&ConfusionMatrix::binary(8, 2, 1, 9), None);
    let (p, r) = (8.0 / 9.0, 0.8);
    let f = 2.0 * p * r / (p + r);
    let closed = (m.precision - p).abs() <= CLOSED_FORM_TOL
        && (m.recall - r).abs() <= CLOSED_FORM_TOL
        && (m.f_measure - f).abs() <= CLOSED_FORM_TOL
        && (m.accuracy - 17.0 / 20.0).abs() <= CLOSED_FORM_TOL;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scores: Vec<f64> = (0..10_000).map(|_| rng.gen()).collect();
    let positive: Vec<bool> = (0..10_000).map(|i| i % 2 == 0).collect();
    let auc = roc_auc(&scores, &positive).unwrap();
    check(
        closed && (auc - 0.5).abs() <= RANDOM_AUC_TOL,
        format!("P/R/F exact to {CLOSED_FORM_TOL:e}; random-score AUC {auc:.4}"),
        format!("closed form ok: {closed}; AUC {auc}"),
    )
}

fn cv_structure() -> Outcome {
    for n in [10usize, 11, 100] {
        for seed in 0..5 {
            let labels: Vec<usize> = (0..n).map(|i| usize::from(i * 3 % 7 < 3)).collect();
            let f = kfold_split(&labels, 10, seed).map_err(|e| e.to_string())?;
            let mut all: Vec<usize> = f.folds.iter().flatten().copied().collect();
            all.sort_unstable();
            if all != (0..n).collect::<Vec<_>>() {
                return Err(format!("n={n}: folds are not a partition"));
            }
            let sizes: Vec<usize> = f.folds.iter().map(Vec::len).collect();
            if sizes.iter().max().unwrap() - sizes.iter().min().unwrap() > 1 {
                return Err(format!("n={n}: fold sizes {sizes:?}"));
            }
            if !f.stratified {
                continue;
            }
            for class in 0..2 {
                let share = labels.iter().filter(|&&y| y == class).count() as f64 / n as f64;
                for fold in &f.folds {
                    let got = fold.iter().filter(|&&i| labels[i] == class).count() as f64;
                    if (got - share * fold.len() as f64).abs() > 1.0 {
                        return Err(format!(
                            "n={n}: class {class} count {got} in fold of {}",
                            fold.len()
                        ));
                    }
                }
            }
        }
    }
    Ok("n = 10, 11, 100: disjoint, exhaustive, sizes within 1, classes within 1".into())
}

fn pca_properties() -> Outcome {
    let mut worst_dot: f64 = 0.0;
    let mut worst_recon: f64 = 0.0;
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..10).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        let pca = Pca::fit(&rows, 1.0).map_err(|e| e.to_string())?;
        if pca.n_components() != 10 {
            return Err(format!(
                "full-rank fit kept {} components",
                pca.n_components()
            ));
        }
        for (a, u) in pca.components.iter().enumerate() {
            for (b, v) in pca.components.iter().enumerate() {
                let dot: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                worst_dot = worst_dot.max((dot - want).abs());
            }
        }
        for row in &rows {
            let z = pca.standardize(row);
            let back = pca.reconstruct_standardized(&pca.transform(row).unwrap());
            for (x, y) in z.iter().zip(&back) {
                worst_recon = worst_recon.max((x - y).abs());
            }
        }
    }
    let line: Vec<Vec<f64>> = (0..20)
        .map(|i| {
            let t = i as f64;
            vec![t, 3.0 * t - 2.0, -t]
        })
        .collect();
    let rank_one = Pca::fit(&line, 0.95)
        .map_err(|e| e.to_string())?
        .n_components();
    check(
        worst_dot <= PCA_ORTHO_TOL && worst_recon <= PCA_RECON_TOL && rank_one == 1,
        format!("max |dot - delta| {worst_dot:.1e}, max reconstruction error {worst_recon:.1e}, rank-1 data -> {rank_one} component"),
        format!("dot {worst_dot:e}, recon {worst_recon:e}, rank-1 components {rank_one}"),
    )
}

fn small_collection(
    seed: u64,
    organized: bool,
    users: usize,
) -> (TweetStore, collusion_kit::corpus::Collection) {
    let kind = if organized {
        BehaviorKind::Organized
    } else {
        BehaviorKind::Organic
    };
    collect(&synthetic(kind, users, "inv", seed))
}

fn invariant_suite() -> Outcome {
    let config = Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let runner = || {
        TestRunner::new_with_rng(
            config.clone(),
            TestRng::deterministic_rng(RngAlgorithm::ChaCha),
        )
    };
    let strategy = (any::<u64>(), 1usize..12, any::<bool>());
    let schema = FeatureSchema::default();
    let scorer = LexiconScorer::default();
    let mut groups: Vec<Vec<String>> = schema
        .user_features
        .iter()
        .map(|f| {
            f.buckets
                .buckets
                .iter()
                .map(|b| format!("user.{}.bucket.{}", f.name, b.label))
                .collect()
        })
        .collect();
    groups.push(
        schema
            .registration
            .labels()
            .iter()
            .map(|l| format!("user.registration.year.{l}"))
            .collect(),
    );

    let complements = runner().run(&strategy, |(seed, users, org)| {
        let (_, c) = small_collection(seed, org, users);
        for s in partition_intervals(&c, Duration::hours(1)).unwrap() {
            let f = extract_slice_features(&s, &scorer).unwrap();
            prop_assert!(
                (f.retweets.retweet_pct + f.unretweeted.unretweeted_pct - 1.0).abs() < 1e-12
            );
            prop_assert!(
                (f.retweets.retweeting_users_pct + f.unretweeted.unretweeted_users_pct - 1.0).abs()
                    < 1e-12
            );
        }
        Ok(())
    });
    let buckets = runner().run(&strategy, |(seed, users, org)| {
        let (store, c) = small_collection(seed, org, users);
        let (row, _) = both_rows(&store, &c);
        for g in &groups {
            let total: f64 = g.iter().map(|n| row.get(n).unwrap()).sum();
            prop_assert!((total - 100.0).abs() < 1e-9);
        }
        Ok(())
    });
    let permutation = runner().run(&strategy, |(seed, users, org)| {
        let (store, c) = small_collection(seed, org, users);
        let (a, oracle) = both_rows(&store, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = c.clone();
        for i in (1..shuffled.expanded_tweets.len()).rev() {
            shuffled.expanded_tweets.swap(i, rng.gen_range(0..=i));
        }
        shuffled.seed_tweets.reverse();
        let (b, _) = both_rows(&store, &shuffled);
        prop_assert!(mismatches(&a, &b).is_empty());
        prop_assert!(mismatches(&a, &oracle).is_empty());
        Ok(())
    });
    let determinism = runner().run(&strategy, |(seed, users, org)| {
        let (sa, ca) = small_collection(seed, org, users);
        let (sb, cb) = small_collection(seed, org, users);
        prop_assert_eq!(both_rows(&sa, &ca).0.values, both_rows(&sb, &cb).0.values);
        Ok(())
    });

    let results = [
        ("ratio complements", complements),
        ("bucket sums", buckets),
        ("permutation invariance", permutation),
        ("determinism", determinism),
    ];
    let failed: Vec<String> = results
        .iter()
        .filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}")))
        .collect();
    check(
        failed.is_empty(),
        format!(
            "{} properties x {PROPERTY_CASES} cases: {}",
            results.len(),
            results.map(|(n, _)| n).join(", ")
        ),
        failed.join("; "),
    )
}

fn ranking_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let rows: Vec<Vec<f64>> = (0..80)
        .map(|_| (0..8).map(|_| rng.gen_range(0..20) as f64).collect())
        .collect();
    let labels = rows.iter().map(|r| usize::from(r[5] >= 10.0)).collect();
    let names = (0..8).map(|j| format!("c{j}")).collect();
    let d = Dataset::new(
        rows,
        names,
        vec![false; 8],
        labels,
        Task::OrganicVsOrganized,
    )
    .map_err(|e| e.to_string())?;
    let ranking = rank_features(&d, 1, &RankParams::default()).map_err(|e| e.to_string())?;
    let first = ranking.features.first().map(|f| f.column);
    if first != Some(5) {
        return Err(format!("determining column 5 ranked behind {first:?}"));
    }

    let params = RankParams {
        forest: ForestParams {
            n_trees: 15,
            ..ForestParams::default()
        },
        ..RankParams::default()
    };
    let mut matched = Vec::new();
    for (width, seed) in [(2, 10), (3, 11), (4, 12), (5, 13)] {
        let toy = toy(width, seed);
        let got = rank_features(&toy, seed, &params).map_err(|e| e.to_string())?;
        let best = exhaustive_best(&toy, &params, seed);
        if got.best_merit != best {
            return Err(format!(
                "width {width}: search found {:.3}, exhaustive {best:.3}",
                got.best_merit
            ));
        }
        matched.push(format!("{width}:{best:.3}"));
    }
    Ok(format!(
        "determining column ranked first; best subset merit equals exhaustive search ({})",
        matched.join(" ")
    ))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, outcome: Outcome| match outcome {
        Ok(msg) => println!("PASS [{id}] {name}: {msg}"),
        Err(msg) => {
            failures += 1;
            println!("FAIL [{id}] {name}: {msg}");
        }
    };
    report(1, "oracle equivalence", oracle_equivalence());
    let separation = synthetic_separation();
    report(2, "synthetic separation", separation_outcome(&separation));
    report(3, "ablation robustness", ablation_outcome(&separation));
    report(4, "metrics correctness", metrics_correctness());
    report(5, "cv structure", cv_structure());
    report(6, "pca properties", pca_properties());
    report(7, "invariant suite", invariant_suite());
    report(8, "ranking sanity", ranking_sanity());
    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
