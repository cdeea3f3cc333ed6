//! Reference feature extraction written as plain loops over the collection.
//!
//! Nothing here calls into the extraction, slicing, or summarization code; it
//! only reads the data types. Tests compare its rows with the main pipeline.

use chrono::{Datelike, NaiveDate};

use crate::corpus::{Collection, Tweet, UserProfile};
use crate::sentiment::{Sentiment, SentimentScorer};
use crate::summarization::{Bucket, FeatureRow, FeatureSchema, RowMeta};

fn carries(t: &Tweet, tag: &str) -> bool {
    for h in &t.hashtags {
        if h == tag {
            return true;
        }
    }
    false
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    for y in v.iter() {
        if *y == x {
            return;
        }
    }
    v.push(x);
}

fn in_bucket(b: &Bucket, v: f64) -> bool {
    let lo_ok = if b.lo_closed { v >= b.lo } else { v > b.lo };
    let hi_ok = match b.hi {
        None => true,
        Some(h) => {
            if b.hi_closed {
                v <= h
            } else {
                v < h
            }
        }
    };
    lo_ok && hi_ok
}

/// mean, var, std, min, max; all zero for no values.
fn five_stats(values: &[f64]) -> [f64; 5] {
    if values.is_empty() {
        return [0.0; 5];
    }
    let mut sum = 0.0;
    let mut min = values[0];
    let mut max = values[0];
    for &v in values {
        sum += v;
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }
    let mean = sum / values.len() as f64;
    let mut sq = 0.0;
    for &v in values {
        sq += (v - mean) * (v - mean);
    }
    let var = sq / values.len() as f64;
    [mean, var, var.sqrt(), min, max]
}

fn div_or_zero(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn user_value(
    name: &str,
    p: &UserProfile,
    c: &Collection,
    today: NaiveDate,
    active_days: usize,
) -> f64 {
    let mut n = 0.0;
    let (mut tags, mut urls, mut mentions, mut media, mut traced) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in &c.expanded_tweets {
        if t.author_id != p.id {
            continue;
        }
        n += 1.0;
        tags += t.hashtags.len() as f64;
        urls += f64::from(t.url_count);
        mentions += t.mentions.len() as f64;
        media += f64::from(t.media_count);
        if carries(t, &c.traced_hashtag) {
            traced += 1.0;
        }
    }
    let mut days = (today - p.registered_at).num_days();
    if days < 1 {
        days = 1;
    }
    let per_day = p.status_count as f64 / days as f64;
    let daily_traced = div_or_zero(traced, active_days as f64);
    match name {
        "tweet_count" => p.status_count as f64,
        "favorite_count" => p.favorite_count as f64,
        "avg_tweets_per_day" => per_day,
        "follower_degree" => div_or_zero(
            p.follower_count as f64,
            p.follower_count as f64 + p.following_count as f64,
        ),
        "hashtag_use" => div_or_zero(tags, n),
        "url_use" => div_or_zero(urls, n),
        "mention_use" => div_or_zero(mentions, n),
        "media_use" => div_or_zero(media, n),
        "traced_hashtag_use" => traced,
        "daily_traced_avg" => daily_traced,
        "daily_comparison" => div_or_zero(daily_traced, per_day),
        _ => f64::NAN,
    }
}

/// Temporal feature `name` over one slice.
fn slice_value(name: &str, slice: &[&Tweet], scorer: &dyn SentimentScorer) -> f64 {
    let n = slice.len() as f64;
    let mut authors: Vec<&str> = Vec::new();
    let mut rt_authors: Vec<&str> = Vec::new();
    let mut originals: Vec<&str> = Vec::new();
    let mut rts = 0.0;
    let (mut tags, mut urls, mut mention_total, mut media) = (0.0, 0.0, 0.0, 0.0);
    let mut distinct_all: Vec<&str> = Vec::new();
    let mut distinct_rt: Vec<&str> = Vec::new();
    let mut distinct_plain: Vec<&str> = Vec::new();
    let mut rt_mentions = 0.0;
    let mut sentiment = [0.0; 5];
    for t in slice {
        push_unique(&mut authors, t.author_id.as_str());
        tags += t.hashtags.len() as f64;
        urls += f64::from(t.url_count);
        media += f64::from(t.media_count);
        mention_total += t.mentions.len() as f64;
        for m in &t.mentions {
            push_unique(&mut distinct_all, m.as_str());
        }
        match &t.retweeted_status_id {
            Some(orig) => {
                rts += 1.0;
                push_unique(&mut originals, orig.as_str());
                push_unique(&mut rt_authors, t.author_id.as_str());
                rt_mentions += t.mentions.len() as f64;
                for m in &t.mentions {
                    push_unique(&mut distinct_rt, m.as_str());
                }
            }
            None => {
                for m in &t.mentions {
                    push_unique(&mut distinct_plain, m.as_str());
                }
            }
        }
        if t.replied_user_id.is_some() {
            let slot = match scorer.score(&t.text) {
                Sentiment::VeryNegative => 0,
                Sentiment::Negative => 1,
                Sentiment::Neutral => 2,
                Sentiment::Positive => 3,
                Sentiment::VeryPositive => 4,
            };
            sentiment[slot] += 1.0;
        }
    }
    let users = authors.len() as f64;
    let rt_users = rt_authors.len() as f64;
    match name {
        "hashtag_use" => tags / n,
        "url_use" => urls / n,
        "mention_use" => mention_total / n,
        "media_use" => media / n,
        "tpu" => n / users,
        "retweet_count" => rts,
        "retweet_pct" => rts / n,
        "original_retweeted_pct" => div_or_zero(originals.len() as f64, rts),
        "retweeting_users_count" => rt_users,
        "retweeting_users_pct" => rt_users / users,
        "unretweeted_pct" => (n - rts) / n,
        "unretweeted_users_pct" => (users - rt_users) / users,
        "unretweeted_count" => n - rts,
        "unretweeted_users_count" => users - rt_users,
        "unretweeted_tweet_user_ratio" => div_or_zero(n - rts, users - rt_users),
        "mention_ratio" => div_or_zero(distinct_all.len() as f64, mention_total),
        "mention_rt_ratio" => div_or_zero(distinct_rt.len() as f64, rt_mentions),
        "mention_nonrt_ratio" => {
            div_or_zero(distinct_plain.len() as f64, mention_total - rt_mentions)
        }
        "sentiment_very_negative_pct" => sentiment[0] / n,
        "sentiment_negative_pct" => sentiment[1] / n,
        "sentiment_neutral_pct" => sentiment[2] / n,
        "sentiment_positive_pct" => sentiment[3] / n,
        "sentiment_very_positive_pct" => sentiment[4] / n,
        _ => f64::NAN,
    }
}

/// Recomputes the feature row of `c` from scratch. Slices are `interval_secs`
/// long on a grid starting at the earliest seed tweet's hour. Statistics over
/// an empty set are reported as zeros.
pub fn oracle_extract(
    c: &Collection,
    today: NaiveDate,
    schema: &FeatureSchema,
    interval_secs: i64,
    scorer: &dyn SentimentScorer,
) -> FeatureRow {
    let tag = c.traced_hashtag.as_str();

    let mut complete: Vec<&UserProfile> = Vec::new();
    let mut incomplete = 0usize;
    for p in c.users.values() {
        match p {
            Some(p) => complete.push(p),
            None => incomplete += 1,
        }
    }

    let mut active_days: Vec<NaiveDate> = Vec::new();
    for t in &c.expanded_tweets {
        if carries(t, tag) {
            push_unique(&mut active_days, t.created_at.date_naive());
        }
    }

    let mut columns = Vec::new();
    let mut values = Vec::new();
    let stat_names = ["mean", "var", "std", "min", "max"];

    for spec in &schema.user_features {
        let per_user: Vec<f64> = complete
            .iter()
            .map(|p| user_value(&spec.name, p, c, today, active_days.len()))
            .collect();
        for b in &spec.buckets.buckets {
            let mut hits = 0.0;
            for &v in &per_user {
                if in_bucket(b, v) {
                    hits += 1.0;
                }
            }
            columns.push(format!("user.{}.bucket.{}", spec.name, b.label));
            values.push(if per_user.is_empty() {
                0.0
            } else {
                100.0 * hits / per_user.len() as f64
            });
        }
        for (s, v) in stat_names.iter().zip(five_stats(&per_user)) {
            columns.push(format!("user.{}.{s}", spec.name));
            values.push(v);
        }
    }

    let mut anchor = i64::MAX;
    for t in &c.seed_tweets {
        anchor = anchor.min(t.created_at.timestamp());
    }
    anchor -= anchor.rem_euclid(3600);
    let mut slots: Vec<i64> = Vec::new();
    for t in &c.expanded_tweets {
        if carries(t, tag) {
            push_unique(
                &mut slots,
                (t.created_at.timestamp() - anchor).div_euclid(interval_secs),
            );
        }
    }
    slots.sort_unstable();
    let slices: Vec<Vec<&Tweet>> = slots
        .iter()
        .map(|&s| {
            c.expanded_tweets
                .iter()
                .filter(|t| {
                    carries(t, tag)
                        && (t.created_at.timestamp() - anchor).div_euclid(interval_secs) == s
                })
                .collect()
        })
        .collect();

    for name in &schema.temporal_features {
        let per_slice: Vec<f64> = slices
            .iter()
            .map(|s| slice_value(name, s, scorer))
            .collect();
        for (s, v) in stat_names.iter().zip(five_stats(&per_slice)) {
            columns.push(format!("temporal.{name}.{s}"));
            values.push(v);
        }
    }

    let reg = &schema.registration;
    let mut labels = vec![format!("lt{}", reg.first_year)];
    let mut y = reg.first_year;
    while y <= reg.last_year {
        labels.push(y.to_string());
        y += 1;
    }
    labels.push(format!("gt{}", reg.last_year));
    let mut counts = vec![0.0; labels.len()];
    let mut after = 0.0;
    for p in &complete {
        let year = p.registered_at.year();
        let slot = if year < reg.first_year {
            0
        } else if year > reg.last_year {
            labels.len() - 1
        } else {
            (year - reg.first_year + 1) as usize
        };
        counts[slot] += 1.0;
        if p.registered_at > reg.cutoff {
            after += 1.0;
        }
    }
    let n = complete.len() as f64;
    for (label, count) in labels.iter().zip(&counts) {
        columns.push(format!("user.registration.year.{label}"));
        values.push(div_or_zero(100.0 * count, n));
    }
    columns.push("user.registration.after_cutoff_pct".into());
    values.push(div_or_zero(100.0 * after, n));
    columns.push("diag.incomplete_user_pct".into());
    values.push(div_or_zero(
        100.0 * incomplete as f64,
        (complete.len() + incomplete) as f64,
    ));

    FeatureRow {
        collection_id: c.traced_hashtag.clone(),
        labels: c.label,
        columns,
        values,
        meta: RowMeta {
            schema_hash: schema.hash(),
            users: complete.len(),
            incomplete_users: incomplete,
            slices: slices.len(),
            zero_denominators: Default::default(),
        },
    }
}
