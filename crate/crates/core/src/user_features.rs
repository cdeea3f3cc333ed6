//! Per-user features over a collection's expanded tweet set.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::Serialize;

use crate::corpus::{Collection, Tweet, UserProfile};

/// Names of the numeric user features, in default column order.
pub const USER_FEATURE_NAMES: [&str; 11] = [
    "tweet_count",
    "favorite_count",
    "avg_tweets_per_day",
    "follower_degree",
    "hashtag_use",
    "url_use",
    "mention_use",
    "media_use",
    "traced_hashtag_use",
    "daily_traced_avg",
    "daily_comparison",
];

/// Features that depend on the traced hashtag itself.
pub const TRACED_USER_FEATURES: [&str; 3] =
    ["traced_hashtag_use", "daily_traced_avg", "daily_comparison"];

/// Average entity counts per tweet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EntityUse {
    pub hashtag: f64,
    pub url: f64,
    pub mention: f64,
    pub media: f64,
}

impl EntityUse {
    /// Per-tweet averages over `tweets`; all zero for an empty set.
    pub fn over<'a>(tweets: impl IntoIterator<Item = &'a Tweet>) -> Self {
        let mut n = 0usize;
        let mut sums = [0usize; 4];
        for t in tweets {
            n += 1;
            sums[0] += t.hashtag_count();
            sums[1] += t.url_count as usize;
            sums[2] += t.mention_count();
            sums[3] += t.media_count as usize;
        }
        if n == 0 {
            return EntityUse::default();
        }
        let n = n as f64;
        EntityUse {
            hashtag: sums[0] as f64 / n,
            url: sums[1] as f64 / n,
            mention: sums[2] as f64 / n,
            media: sums[3] as f64 / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserFeatureVector {
    pub user_id: String,
    pub tweet_count: u64,
    pub favorite_count: u64,
    pub avg_tweets_per_day: f64,
    pub follower_degree: f64,
    pub entity_use: EntityUse,
    pub traced_hashtag_use: u64,
    pub daily_traced_avg: f64,
    pub daily_comparison: f64,
    pub registered_at: NaiveDate,
    pub registered_after_cutoff: bool,
}

impl UserFeatureVector {
    /// Looks a numeric feature up by its column name.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "tweet_count" => self.tweet_count as f64,
            "favorite_count" => self.favorite_count as f64,
            "avg_tweets_per_day" => self.avg_tweets_per_day,
            "follower_degree" => self.follower_degree,
            "hashtag_use" => self.entity_use.hashtag,
            "url_use" => self.entity_use.url,
            "mention_use" => self.entity_use.mention,
            "media_use" => self.entity_use.media,
            "traced_hashtag_use" => self.traced_hashtag_use as f64,
            "daily_traced_avg" => self.daily_traced_avg,
            "daily_comparison" => self.daily_comparison,
            _ => return None,
        })
    }
}

/// Statuses per day since registration; at least one day is assumed.
pub fn avg_tweets_per_day(u: &UserProfile, today: NaiveDate) -> f64 {
    let days = (today - u.registered_at).num_days().max(1);
    u.status_count as f64 / days as f64
}

/// `followers / (followers + following)`, or 0 for an account with neither.
pub fn follower_degree(u: &UserProfile) -> f64 {
    let total = u.follower_count + u.following_count;
    if total == 0 {
        0.0
    } else {
        u.follower_count as f64 / total as f64
    }
}

pub fn entity_use_user(user_id: &str, c: &Collection) -> EntityUse {
    EntityUse::over(c.tweets_of(user_id))
}

/// Number of the user's expanded-set tweets carrying the traced hashtag.
pub fn traced_hashtag_use(user_id: &str, c: &Collection) -> u64 {
    c.tweets_of(user_id)
        .filter(|t| t.has_hashtag(&c.traced_hashtag))
        .count() as u64
}

/// UTC calendar days on which the traced hashtag occurs in the expanded set.
pub fn traced_days(c: &Collection) -> BTreeSet<NaiveDate> {
    c.expanded_tweets
        .iter()
        .filter(|t| t.has_hashtag(&c.traced_hashtag))
        .map(|t| t.created_at.date_naive())
        .collect()
}

pub fn daily_traced_avg(user_id: &str, c: &Collection) -> f64 {
    per_active_day(traced_hashtag_use(user_id, c), traced_days(c).len())
}

fn per_active_day(traced: u64, active_days: usize) -> f64 {
    if active_days == 0 {
        0.0
    } else {
        traced as f64 / active_days as f64
    }
}

/// Traced-hashtag daily rate relative to the account's overall daily rate.
pub fn daily_comparison(u: &UserProfile, c: &Collection, today: NaiveDate) -> f64 {
    comparison(daily_traced_avg(&u.id, c), avg_tweets_per_day(u, today))
}

fn comparison(daily_traced: f64, per_day: f64) -> f64 {
    if per_day > 0.0 {
        daily_traced / per_day
    } else {
        0.0
    }
}

/// Result of extracting user features for a whole collection.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UserExtraction {
    pub vectors: Vec<UserFeatureVector>,
    /// Authors without a profile; excluded from `vectors`.
    pub incomplete: Vec<String>,
    /// Users whose daily comparison was defined as 0 for lack of a rate.
    pub undefined_comparisons: usize,
}

impl UserExtraction {
    pub fn total_users(&self) -> usize {
        self.vectors.len() + self.incomplete.len()
    }
}

/// One feature vector per collection user with a known profile, in user-id order.
pub fn extract_user_features(
    c: &Collection,
    today: NaiveDate,
    cutoff: NaiveDate,
) -> UserExtraction {
    let mut by_user: BTreeMap<&str, Vec<&Tweet>> = BTreeMap::new();
    for t in &c.expanded_tweets {
        by_user.entry(t.author_id.as_str()).or_default().push(t);
    }
    let active_days = traced_days(c).len();

    let mut out = UserExtraction::default();
    for (user_id, profile) in &c.users {
        let Some(profile) = profile else {
            out.incomplete.push(user_id.clone());
            continue;
        };
        let tweets = by_user
            .get(user_id.as_str())
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let traced = tweets
            .iter()
            .filter(|t| t.has_hashtag(&c.traced_hashtag))
            .count() as u64;
        let per_day = avg_tweets_per_day(profile, today);
        let daily_traced = per_active_day(traced, active_days);
        if per_day <= 0.0 {
            out.undefined_comparisons += 1;
        }
        out.vectors.push(UserFeatureVector {
            user_id: user_id.clone(),
            tweet_count: profile.status_count,
            favorite_count: profile.favorite_count,
            avg_tweets_per_day: per_day,
            follower_degree: follower_degree(profile),
            entity_use: EntityUse::over(tweets.iter().copied()),
            traced_hashtag_use: traced,
            daily_traced_avg: daily_traced,
            daily_comparison: comparison(daily_traced, per_day),
            registered_at: profile.registered_at,
            registered_after_cutoff: profile.registered_at > cutoff,
        });
    }
    if !out.incomplete.is_empty() {
        log::warn!(
            "#{}: {} of {} users have no profile and are excluded",
            c.traced_hashtag,
            out.incomplete.len(),
            out.total_users()
        );
    }
    out
}
