//! Features of the traced-hashtag tweets inside one temporal slice.
//!
//! Every ratio whose denominator is zero is reported as 0 and its name is
//! recorded in [`SliceFeatureVector::undefined`].

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::corpus::{TemporalSlice, Tweet};
use crate::error::{Error, Result};
use crate::sentiment::SentimentScorer;
use crate::user_features::EntityUse;

/// Names of the per-slice features, in default column order.
pub const TEMPORAL_FEATURE_NAMES: [&str; 23] = [
    "hashtag_use",
    "url_use",
    "mention_use",
    "media_use",
    "tpu",
    "retweet_count",
    "retweet_pct",
    "original_retweeted_pct",
    "retweeting_users_count",
    "retweeting_users_pct",
    "unretweeted_pct",
    "unretweeted_users_pct",
    "unretweeted_count",
    "unretweeted_users_count",
    "unretweeted_tweet_user_ratio",
    "mention_ratio",
    "mention_rt_ratio",
    "mention_nonrt_ratio",
    "sentiment_very_negative_pct",
    "sentiment_negative_pct",
    "sentiment_neutral_pct",
    "sentiment_positive_pct",
    "sentiment_very_positive_pct",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetweetMetrics {
    pub retweet_count: usize,
    pub retweet_pct: f64,
    pub original_retweeted_pct: f64,
    pub retweeting_users_count: usize,
    pub retweeting_users_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnretweetedMetrics {
    pub unretweeted_pct: f64,
    pub unretweeted_users_pct: f64,
    pub unretweeted_count: usize,
    pub unretweeted_users_count: usize,
    pub unretweeted_tweet_user_ratio: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MentionMetrics {
    pub mention_ratio: f64,
    pub mention_rt_ratio: f64,
    pub mention_nonrt_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceFeatureVector {
    pub slice_start: DateTime<Utc>,
    pub tweet_count: usize,
    pub entity_use: EntityUse,
    pub tpu: f64,
    pub retweets: RetweetMetrics,
    pub unretweeted: UnretweetedMetrics,
    pub mentions: MentionMetrics,
    /// Share of slice tweets that are replies of each class, indexed by [`Sentiment::index`].
    pub sentiment_pct: [f64; 5],
    /// Features that were defined as 0 because their denominator was 0.
    pub undefined: Vec<&'static str>,
}

impl SliceFeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "hashtag_use" => self.entity_use.hashtag,
            "url_use" => self.entity_use.url,
            "mention_use" => self.entity_use.mention,
            "media_use" => self.entity_use.media,
            "tpu" => self.tpu,
            "retweet_count" => self.retweets.retweet_count as f64,
            "retweet_pct" => self.retweets.retweet_pct,
            "original_retweeted_pct" => self.retweets.original_retweeted_pct,
            "retweeting_users_count" => self.retweets.retweeting_users_count as f64,
            "retweeting_users_pct" => self.retweets.retweeting_users_pct,
            "unretweeted_pct" => self.unretweeted.unretweeted_pct,
            "unretweeted_users_pct" => self.unretweeted.unretweeted_users_pct,
            "unretweeted_count" => self.unretweeted.unretweeted_count as f64,
            "unretweeted_users_count" => self.unretweeted.unretweeted_users_count as f64,
            "unretweeted_tweet_user_ratio" => self.unretweeted.unretweeted_tweet_user_ratio,
            "mention_ratio" => self.mentions.mention_ratio,
            "mention_rt_ratio" => self.mentions.mention_rt_ratio,
            "mention_nonrt_ratio" => self.mentions.mention_nonrt_ratio,
            "sentiment_very_negative_pct" => self.sentiment_pct[0],
            "sentiment_negative_pct" => self.sentiment_pct[1],
            "sentiment_neutral_pct" => self.sentiment_pct[2],
            "sentiment_positive_pct" => self.sentiment_pct[3],
            "sentiment_very_positive_pct" => self.sentiment_pct[4],
            _ => return None,
        })
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn non_empty(tweets: &[&Tweet]) -> Result<()> {
    if tweets.is_empty() {
        Err(Error::EmptyInput("temporal slice has no tweets"))
    } else {
        Ok(())
    }
}

pub fn entity_use_temporal(tweets: &[&Tweet]) -> Result<EntityUse> {
    non_empty(tweets)?;
    Ok(EntityUse::over(tweets.iter().copied()))
}

/// Tweets per distinct author.
pub fn tweets_per_user(tweets: &[&Tweet]) -> Result<f64> {
    non_empty(tweets)?;
    let users: HashSet<&str> = tweets.iter().map(|t| t.author_id.as_str()).collect();
    Ok(tweets.len() as f64 / users.len() as f64)
}

pub fn retweet_metrics(tweets: &[&Tweet]) -> Result<RetweetMetrics> {
    non_empty(tweets)?;
    let mut users: BTreeMap<&str, bool> = BTreeMap::new();
    let mut originals = HashSet::new();
    let mut retweet_count = 0;
    for t in tweets {
        let retweeted = users.entry(t.author_id.as_str()).or_insert(false);
        if let Some(orig) = &t.retweeted_status_id {
            retweet_count += 1;
            originals.insert(orig.as_str());
            *retweeted = true;
        }
    }
    let retweeting_users_count = users.values().filter(|&&r| r).count();
    Ok(RetweetMetrics {
        retweet_count,
        retweet_pct: retweet_count as f64 / tweets.len() as f64,
        original_retweeted_pct: ratio(originals.len(), retweet_count).unwrap_or(0.0),
        retweeting_users_count,
        retweeting_users_pct: retweeting_users_count as f64 / users.len() as f64,
    })
}

/// Complements of [`retweet_metrics`].
pub fn unretweeted_metrics(tweets: &[&Tweet]) -> Result<UnretweetedMetrics> {
    let rt = retweet_metrics(tweets)?;
    let users: HashSet<&str> = tweets.iter().map(|t| t.author_id.as_str()).collect();
    let unretweeted_count = tweets.len() - rt.retweet_count;
    let unretweeted_users_count = users.len() - rt.retweeting_users_count;
    Ok(UnretweetedMetrics {
        unretweeted_pct: 1.0 - rt.retweet_pct,
        unretweeted_users_pct: 1.0 - rt.retweeting_users_pct,
        unretweeted_count,
        unretweeted_users_count,
        unretweeted_tweet_user_ratio: ratio(unretweeted_count, unretweeted_users_count)
            .unwrap_or(0.0),
    })
}

/// Distinct mentioned users over mention occurrences: overall, within
/// retweets, and within the remaining tweets.
pub fn mention_metrics(tweets: &[&Tweet]) -> Result<MentionMetrics> {
    Ok(mention_parts(tweets)?.0)
}

fn mention_parts(tweets: &[&Tweet]) -> Result<(MentionMetrics, [bool; 3])> {
    non_empty(tweets)?;
    let mut all = BTreeSet::new();
    let mut in_rt = BTreeSet::new();
    let mut in_non_rt = BTreeSet::new();
    let (mut total, mut rt_total) = (0usize, 0usize);
    for t in tweets {
        total += t.mention_count();
        all.extend(t.mentions.iter().map(String::as_str));
        if t.is_retweet() {
            rt_total += t.mention_count();
            in_rt.extend(t.mentions.iter().map(String::as_str));
        } else {
            in_non_rt.extend(t.mentions.iter().map(String::as_str));
        }
    }
    let parts = [
        ratio(all.len(), total),
        ratio(in_rt.len(), rt_total),
        ratio(in_non_rt.len(), total - rt_total),
    ];
    Ok((
        MentionMetrics {
            mention_ratio: parts[0].unwrap_or(0.0),
            mention_rt_ratio: parts[1].unwrap_or(0.0),
            mention_nonrt_ratio: parts[2].unwrap_or(0.0),
        },
        parts.map(|p| p.is_none()),
    ))
}

/// Share of the slice's tweets that are replies with each sentiment. The
/// denominator is the whole slice, so the five values sum to the reply share.
pub fn sentiment_metrics(tweets: &[&Tweet], scorer: &dyn SentimentScorer) -> Result<[f64; 5]> {
    non_empty(tweets)?;
    let mut counts = [0usize; 5];
    for t in tweets.iter().filter(|t| t.is_reply()) {
        counts[scorer.score(&t.text).index()] += 1;
    }
    let n = tweets.len() as f64;
    Ok(counts.map(|c| c as f64 / n))
}

pub fn extract_slice_features(
    slice: &TemporalSlice<'_>,
    scorer: &dyn SentimentScorer,
) -> Result<SliceFeatureVector> {
    let tweets = slice.tweets.as_slice();
    let retweets = retweet_metrics(tweets)?;
    let unretweeted = unretweeted_metrics(tweets)?;
    let (mentions, mention_undefined) = mention_parts(tweets)?;

    let mut undefined = Vec::new();
    if retweets.retweet_count == 0 {
        undefined.push("original_retweeted_pct");
    }
    if unretweeted.unretweeted_users_count == 0 {
        undefined.push("unretweeted_tweet_user_ratio");
    }
    for (name, missing) in ["mention_ratio", "mention_rt_ratio", "mention_nonrt_ratio"]
        .into_iter()
        .zip(mention_undefined)
    {
        if missing {
            undefined.push(name);
        }
    }

    Ok(SliceFeatureVector {
        slice_start: slice.interval_start,
        tweet_count: tweets.len(),
        entity_use: entity_use_temporal(tweets)?,
        tpu: tweets_per_user(tweets)?,
        retweets,
        unretweeted,
        mentions,
        sentiment_pct: sentiment_metrics(tweets, scorer)?,
        undefined,
    })
}

/// Convenience over [`extract_slice_features`] for several slices.
pub fn extract_temporal_features(
    slices: &[TemporalSlice<'_>],
    scorer: &dyn SentimentScorer,
) -> Result<Vec<SliceFeatureVector>> {
    slices
        .iter()
        .map(|s| extract_slice_features(s, scorer))
        .collect()
}
