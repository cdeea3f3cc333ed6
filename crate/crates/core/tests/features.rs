mod common;

use chrono::{Duration, NaiveDate};
use collusion_kit::corpus::{
    build_collection, partition_intervals, Collection, Tweet, TweetStore, UserProfile,
};
use collusion_kit::sentiment::LexiconScorer;
use collusion_kit::summarization::{BucketScheme, FeatureSchema};
use collusion_kit::synth::{generate_collection, synthetic_epoch, BehaviorKind, BehaviorProfile};
use collusion_kit::temporal_features::{extract_slice_features, TEMPORAL_FEATURE_NAMES};
use collusion_kit::user_features::USER_FEATURE_NAMES;
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_collection(seed: u64, organized: bool, users: usize) -> (TweetStore, Collection) {
    let kind = if organized {
        BehaviorKind::Organized
    } else {
        BehaviorKind::Organic
    };
    let mut p = BehaviorProfile::for_kind(kind);
    p.users = users;
    let corpus = generate_collection(&p, "prop", seed).unwrap();
    collect(&corpus)
}

fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        items.swap(i, rng.gen_range(0..=i));
    }
}

fn bucket_groups(schema: &FeatureSchema) -> Vec<Vec<String>> {
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
    groups
}

#[test]
fn single_tweet_collection_has_zero_variances() {
    let t = Tweet {
        id: "1".into(),
        author_id: "solo".into(),
        created_at: synthetic_epoch(),
        text: "only one".into(),
        hashtags: vec!["lonely".into()],
        mentions: vec![],
        url_count: 1,
        media_count: 0,
        retweeted_status_id: None,
        replied_user_id: None,
    };
    let p = UserProfile {
        id: "solo".into(),
        registered_at: NaiveDate::from_ymd_opt(2012, 1, 1).unwrap(),
        follower_count: 5,
        following_count: 5,
        status_count: 100,
        favorite_count: 3,
    };
    let store = TweetStore::from_records(vec![t], vec![p]);
    let c = build_collection(&store, "lonely", 7).unwrap();
    let (main, oracle) = both_rows(&store, &c);
    assert!(mismatches(&main, &oracle).is_empty());
    for (name, v) in main.columns.iter().zip(&main.values) {
        if name.ends_with(".var") || name.ends_with(".std") {
            assert_eq!(*v, 0.0, "{name}");
        }
    }
    assert_eq!(main.width(), FeatureSchema::default().column_names().len());
}

#[test]
fn column_layout_matches_feature_lists() {
    let schema = FeatureSchema::default();
    let cols = schema.columns();
    let expected_user: usize = schema
        .user_features
        .iter()
        .map(|f| f.buckets.buckets.len() + 5)
        .sum();
    let expected =
        expected_user + 5 * TEMPORAL_FEATURE_NAMES.len() + schema.registration.labels().len() + 2;
    assert_eq!(cols.len(), expected);
    assert_eq!(schema.user_features.len(), USER_FEATURE_NAMES.len());
    let traced: Vec<&str> = schema
        .user_features
        .iter()
        .filter(|f| f.traced)
        .map(|f| f.name.as_str())
        .collect();
    assert_eq!(traced.len(), 3);
    assert!(cols
        .iter()
        .filter(|c| c.traced)
        .all(|c| traced.iter().any(|t| c.name.contains(t))));
}

#[test]
fn default_bucket_schemes_tile_the_half_line() {
    for s in [
        BucketScheme::ratio(),
        BucketScheme::count(),
        BucketScheme::profile_counter(),
        BucketScheme::unit_fraction(),
    ] {
        s.validate().unwrap();
        for v in [0.0, 0.25, 0.5, 0.9, 0.95, 1.0, 1.5, 10.0, 10.5, 100.0, 1e9] {
            let hits = s.buckets.iter().filter(|b| b.contains(v)).count();
            assert_eq!(hits, 1, "{v}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn retweet_ratios_complement(seed in any::<u64>(), users in 1usize..12, organized in any::<bool>()) {
        let (_, c) = small_collection(seed, organized, users);
        let scorer = LexiconScorer::default();
        for s in partition_intervals(&c, Duration::hours(1)).unwrap() {
            let f = extract_slice_features(&s, &scorer).unwrap();
            prop_assert!((f.retweets.retweet_pct + f.unretweeted.unretweeted_pct - 1.0).abs() < 1e-12);
            prop_assert!((f.retweets.retweeting_users_pct + f.unretweeted.unretweeted_users_pct - 1.0).abs() < 1e-12);
            prop_assert_eq!(f.retweets.retweet_count + f.unretweeted.unretweeted_count, f.tweet_count);
            let replies = s.tweets.iter().filter(|t| t.is_reply()).count() as f64 / f.tweet_count as f64;
            prop_assert!((f.sentiment_pct.iter().sum::<f64>() - replies).abs() < 1e-12);
        }
    }

    #[test]
    fn bucket_groups_sum_to_100(seed in any::<u64>(), users in 1usize..12, organized in any::<bool>()) {
        let (store, c) = small_collection(seed, organized, users);
        let (row, _) = both_rows(&store, &c);
        let schema = FeatureSchema::default();
        for group in bucket_groups(&schema) {
            let total: f64 = group.iter().map(|n| row.get(n).unwrap()).sum();
            prop_assert!((total - 100.0).abs() < 1e-9, "{:?} sums to {}", group[0], total);
        }
        prop_assert!(row.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rows_ignore_tweet_order(seed in any::<u64>(), users in 1usize..12, organized in any::<bool>()) {
        let (store, c) = small_collection(seed, organized, users);
        let (main, oracle) = both_rows(&store, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = c.clone();
        shuffle(&mut shuffled.seed_tweets, &mut rng);
        shuffle(&mut shuffled.expanded_tweets, &mut rng);
        let (main2, oracle2) = both_rows(&store, &shuffled);
        prop_assert!(mismatches(&main, &main2).is_empty());
        prop_assert!(mismatches(&oracle, &oracle2).is_empty());
        prop_assert!(mismatches(&main, &oracle).is_empty());
    }

    #[test]
    fn generation_and_extraction_are_deterministic(seed in any::<u64>(), users in 1usize..8, organized in any::<bool>()) {
        let kind = if organized { BehaviorKind::Organized } else { BehaviorKind::Organic };
        let mut p = BehaviorProfile::for_kind(kind);
        p.users = users;
        let a = generate_collection(&p, "det", seed).unwrap();
        let b = generate_collection(&p, "det", seed).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.write_tweets(&mut ba).unwrap();
        b.write_tweets(&mut bb).unwrap();
        prop_assert_eq!(ba, bb);
        let (sa, ca) = collect(&a);
        let (ra, _) = both_rows(&sa, &ca);
        let (sb, cb) = collect(&b);
        let (rb, _) = both_rows(&sb, &cb);
        prop_assert_eq!(ra.values, rb.values);
    }
}
