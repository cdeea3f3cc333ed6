//! Offline tweet corpora: ingestion, collection construction, temporal slicing,
//! and the descriptive statistics used when inspecting a hashtag by hand.
//!
//! A [`TweetStore`] is built once from JSONL files and never mutated. Everything
//! downstream borrows from it or from a [`Collection`] built out of it.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, NaiveDate, Utc};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Registration cutoff used by the "new accounts" analysis (July 2015).
pub const DEFAULT_REGISTRATION_CUTOFF: (i32, u32, u32) = (2015, 7, 1);

/// Default half-width of the expansion window around each seed post.
pub const DEFAULT_WINDOW_DAYS: u32 = 7;

pub fn default_cutoff() -> NaiveDate {
    let (y, m, d) = DEFAULT_REGISTRATION_CUTOFF;
    NaiveDate::from_ymd_opt(y, m, d).expect("valid constant date")
}

/// One post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub author_id: String,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub text: String,
    /// Lowercase, without the leading `#`. Multiplicity is preserved.
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<String>,
    #[serde(default)]
    pub url_count: u32,
    #[serde(default)]
    pub media_count: u32,
    #[serde(default)]
    pub retweeted_status_id: Option<String>,
    #[serde(default)]
    pub replied_user_id: Option<String>,
}

impl Tweet {
    pub fn is_retweet(&self) -> bool {
        self.retweeted_status_id.is_some()
    }

    pub fn is_reply(&self) -> bool {
        self.replied_user_id.is_some()
    }

    pub fn has_hashtag(&self, tag: &str) -> bool {
        self.hashtags.iter().any(|h| h == tag)
    }

    pub fn hashtag_count(&self) -> usize {
        self.hashtags.len()
    }

    pub fn mention_count(&self) -> usize {
        self.mentions.len()
    }

    fn normalize(&mut self) {
        for tag in &mut self.hashtags {
            *tag = normalize_hashtag(tag);
        }
    }
}

/// Lowercases a hashtag and strips any leading `#`.
pub fn normalize_hashtag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}

/// Account-level counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: String,
    #[serde(deserialize_with = "deserialize_date")]
    pub registered_at: NaiveDate,
    #[serde(default)]
    pub follower_count: u64,
    #[serde(default)]
    pub following_count: u64,
    #[serde(default)]
    pub status_count: u64,
    #[serde(default)]
    pub favorite_count: u64,
}

fn deserialize_date<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<NaiveDate, D::Error> {
    let raw = String::deserialize(d)?;
    parse_date(&raw).map_err(serde::de::Error::custom)
}

/// Accepts either `YYYY-MM-DD` or a full RFC 3339 timestamp.
pub fn parse_date(raw: &str) -> std::result::Result<NaiveDate, String> {
    if let Ok(date) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Ok(date);
    }
    DateTime::parse_from_rfc3339(raw)
        .map(|dt| dt.with_timezone(&Utc).date_naive())
        .map_err(|e| format!("invalid date `{raw}`: {e}"))
}

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_lowercase().as_str() {
                    $($text $(| $alias)* => Ok($name::$variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        concat!("unknown ", stringify!($name), " label `{}`"), other
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

label_enum!(
    /// Whether a collection shows coordinated activity.
    Organization {
        Organic => "organic",
        Organized => "organized",
    }
);

label_enum!(Politicality {
    NonPolitical => "nonpolitical" | "non-political",
    Political => "political",
});

label_enum!(
    /// Camp alignment for the three-way task.
    Camp {
        ProHillary => "prohillary" | "pro-hillary",
        ProTrump => "protrump" | "pro-trump",
        Neither => "none",
    }
);

/// Manual labels of a collection; any of them may be missing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelSet {
    pub organization: Option<Organization>,
    pub politicality: Option<Politicality>,
    pub camp: Option<Camp>,
}

/// Counts reported by [`TweetStore::load`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub files: usize,
    pub tweets: usize,
    pub profiles: usize,
    /// Lines that failed to parse as either record type.
    pub skipped: usize,
    /// Tweets dropped because their id was already present.
    pub duplicates: usize,
}

/// Immutable, indexed set of tweets and profiles.
#[derive(Debug, Clone)]
pub struct TweetStore {
    tweets: Vec<Tweet>,
    profiles: HashMap<String, UserProfile>,
    by_hashtag: HashMap<String, Vec<usize>>,
    by_author: HashMap<String, Vec<usize>>,
    report: LoadReport,
}

impl TweetStore {
    /// Loads a JSONL file, or every `*.jsonl` file in a directory.
    ///
    /// For a single file, a sibling `users.jsonl` is picked up as well. Lines are
    /// classified by shape: objects with `author_id` are tweets, objects with
    /// `registered_at` are profiles, anything else counts as skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_paths(&[path.as_ref().to_path_buf()])
    }

    pub fn load_paths(paths: &[PathBuf]) -> Result<Self> {
        let mut files = BTreeSet::new();
        for path in paths {
            files.extend(jsonl_files(path)?);
        }

        let mut tweets = Vec::new();
        let mut profiles = Vec::new();
        let mut skipped = 0;
        for file in &files {
            let handle = fs::File::open(file).map_err(|e| Error::io(file, e))?;
            for line in BufReader::new(handle).lines() {
                let line = line.map_err(|e| Error::io(file, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match parse_record(&line) {
                    Some(Record::Tweet(t)) => tweets.push(t),
                    Some(Record::Profile(p)) => profiles.push(p),
                    None => skipped += 1,
                }
            }
        }
        if tweets.is_empty() {
            let shown = paths.first().cloned().unwrap_or_default();
            return Err(Error::EmptyCorpus(shown));
        }
        if skipped > 0 {
            log::warn!("skipped {skipped} malformed corpus lines");
        }

        let mut store = Self::from_records(tweets, profiles);
        store.report.files = files.len();
        store.report.skipped = skipped;
        Ok(store)
    }

    /// Builds a store from in-memory records. Hashtags are normalized and
    /// duplicate tweet ids collapse to their first occurrence.
    pub fn from_records(tweets: Vec<Tweet>, profiles: Vec<UserProfile>) -> Self {
        let mut seen = HashSet::new();
        let mut duplicates = 0;
        let mut kept: Vec<Tweet> = Vec::with_capacity(tweets.len());
        for mut t in tweets {
            if !seen.insert(t.id.clone()) {
                duplicates += 1;
                continue;
            }
            t.normalize();
            kept.push(t);
        }
        kept.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));

        let mut by_hashtag: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_author: HashMap<String, Vec<usize>> = HashMap::new();
        for (idx, t) in kept.iter().enumerate() {
            let distinct: BTreeSet<&str> = t.hashtags.iter().map(String::as_str).collect();
            for tag in distinct {
                by_hashtag.entry(tag.to_owned()).or_default().push(idx);
            }
            by_author.entry(t.author_id.clone()).or_default().push(idx);
        }

        let profile_count = profiles.len();
        let profiles: HashMap<String, UserProfile> =
            profiles.into_iter().map(|p| (p.id.clone(), p)).collect();

        TweetStore {
            report: LoadReport {
                files: 0,
                tweets: kept.len(),
                profiles: profile_count,
                skipped: 0,
                duplicates,
            },
            tweets: kept,
            profiles,
            by_hashtag,
            by_author,
        }
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// All tweets in `(created_at, id)` order.
    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn profile(&self, user_id: &str) -> Option<&UserProfile> {
        self.profiles.get(user_id)
    }

    pub fn profiles(&self) -> impl Iterator<Item = &UserProfile> {
        self.profiles.values()
    }

    /// Tweets carrying `tag` (case-insensitive), in time order.
    pub fn with_hashtag<'a>(&'a self, tag: &str) -> impl Iterator<Item = &'a Tweet> + 'a {
        let idx = self
            .by_hashtag
            .get(&normalize_hashtag(tag))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        idx.iter().map(move |&i| &self.tweets[i])
    }

    pub fn by_author<'a>(&'a self, author: &str) -> impl Iterator<Item = &'a Tweet> + 'a {
        self.author_range(author, None, None)
    }

    /// Tweets by `author` with `from <= created_at <= to`.
    pub fn by_author_between<'a>(
        &'a self,
        author: &str,
        from: DateTime<Utc>,
        to: DateTime<Utc>,
    ) -> impl Iterator<Item = &'a Tweet> + 'a {
        self.author_range(author, Some(from), Some(to))
    }

    fn author_range<'a>(
        &'a self,
        author: &str,
        from: Option<DateTime<Utc>>,
        to: Option<DateTime<Utc>>,
    ) -> impl Iterator<Item = &'a Tweet> + 'a {
        let idx = self.by_author.get(author).map(Vec::as_slice).unwrap_or(&[]);
        let lo = from.map_or(0, |f| {
            idx.partition_point(|&i| self.tweets[i].created_at < f)
        });
        let hi = to.map_or(idx.len(), |t| {
            idx.partition_point(|&i| self.tweets[i].created_at <= t)
        });
        idx[lo..hi.max(lo)].iter().map(move |&i| &self.tweets[i])
    }

    /// Latest tweet timestamp; the pipeline's default "today".
    pub fn max_timestamp(&self) -> Option<DateTime<Utc>> {
        self.tweets.last().map(|t| t.created_at)
    }
}

enum Record {
    Tweet(Tweet),
    Profile(UserProfile),
}

fn parse_record(line: &str) -> Option<Record> {
    let value: serde_json::Value = serde_json::from_str(line).ok()?;
    let obj = value.as_object()?;
    if obj.contains_key("author_id") {
        serde_json::from_value(value).ok().map(Record::Tweet)
    } else if obj.contains_key("registered_at") {
        serde_json::from_value(value).ok().map(Record::Profile)
    } else {
        None
    }
}

fn jsonl_files(path: &Path) -> Result<Vec<PathBuf>> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_dir() {
        let mut out = Vec::new();
        for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let p = entry.map_err(|e| Error::io(path, e))?.path();
            if p.is_file() && p.extension().is_some_and(|e| e == "jsonl") {
                out.push(p);
            }
        }
        out.sort();
        Ok(out)
    } else {
        let mut out = vec![path.to_path_buf()];
        if let Some(parent) = path.parent() {
            let sibling = parent.join("users.jsonl");
            if sibling.is_file() && sibling != path {
                out.push(sibling);
            }
        }
        Ok(out)
    }
}

/// A traced hashtag's seed set, its expansion, and the contributing users.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub traced_hashtag: String,
    /// Tweets containing the traced hashtag, in time order.
    pub seed_tweets: Vec<Tweet>,
    /// Seed tweets plus the seed authors' tweets near their seed posts.
    pub expanded_tweets: Vec<Tweet>,
    /// Seed authors; `None` when no profile was found.
    pub users: BTreeMap<String, Option<UserProfile>>,
    pub expansion_window_days: u32,
    pub label: LabelSet,
}

impl Collection {
    pub fn with_label(mut self, label: LabelSet) -> Self {
        self.label = label;
        self
    }

    /// Tweets of `user` within the expanded set.
    pub fn tweets_of<'a>(&'a self, user: &'a str) -> impl Iterator<Item = &'a Tweet> + 'a {
        self.expanded_tweets
            .iter()
            .filter(move |t| t.author_id == user)
    }
}

/// Builds the collection for `traced_hashtag`: every tweet carrying the tag is a
/// seed, and each seed author's other tweets within `window_days` days on either
/// side of any of their seed posts join the expanded set.
pub fn build_collection(
    store: &TweetStore,
    traced_hashtag: &str,
    window_days: u32,
) -> Result<Collection> {
    let tag = normalize_hashtag(traced_hashtag);
    if tag.is_empty() {
        return Err(Error::InvalidArgument("traced hashtag is empty".into()));
    }
    if window_days == 0 {
        return Err(Error::InvalidArgument(
            "expansion window must be positive".into(),
        ));
    }

    let seeds: Vec<&Tweet> = store.with_hashtag(&tag).collect();
    if seeds.is_empty() {
        return Err(Error::UnknownHashtag(tag));
    }

    let mut seed_times: BTreeMap<&str, Vec<DateTime<Utc>>> = BTreeMap::new();
    for t in &seeds {
        seed_times
            .entry(t.author_id.as_str())
            .or_default()
            .push(t.created_at);
    }

    let window = Duration::days(i64::from(window_days));
    let mut expanded: BTreeMap<(DateTime<Utc>, &str), &Tweet> = BTreeMap::new();
    for t in &seeds {
        expanded.insert((t.created_at, t.id.as_str()), t);
    }
    for (author, times) in &seed_times {
        for (from, to) in merge_windows(times, window) {
            for t in store.by_author_between(author, from, to) {
                expanded.entry((t.created_at, t.id.as_str())).or_insert(t);
            }
        }
    }

    let users = seed_times
        .keys()
        .map(|&u| (u.to_owned(), store.profile(u).cloned()))
        .collect();

    Ok(Collection {
        traced_hashtag: tag,
        seed_tweets: seeds.into_iter().cloned().collect(),
        expanded_tweets: expanded.into_values().cloned().collect(),
        users,
        expansion_window_days: window_days,
        label: LabelSet::default(),
    })
}

/// Union of `[t - w, t + w]` over sorted seed times, as disjoint ranges.
fn merge_windows(times: &[DateTime<Utc>], w: Duration) -> Vec<(DateTime<Utc>, DateTime<Utc>)> {
    let mut out: Vec<(DateTime<Utc>, DateTime<Utc>)> = Vec::new();
    for &t in times {
        let (lo, hi) = (t - w, t + w);
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Traced-hashtag tweets that fall in one fixed-length interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSlice<'a> {
    pub interval_start: DateTime<Utc>,
    pub interval_length: Duration,
    pub tweets: Vec<&'a Tweet>,
}

/// Earliest seed timestamp truncated to the hour.
pub fn interval_anchor(c: &Collection) -> Option<DateTime<Utc>> {
    let first = c.seed_tweets.iter().map(|t| t.created_at).min()?;
    let secs = first.timestamp();
    DateTime::from_timestamp(secs - secs.rem_euclid(3600), 0)
}

/// Groups the expanded set's traced-hashtag tweets into non-empty slices of
/// length `interval`, on a grid anchored at [`interval_anchor`].
pub fn partition_intervals(c: &Collection, interval: Duration) -> Result<Vec<TemporalSlice<'_>>> {
    let step = interval.num_seconds();
    if step <= 0 {
        return Err(Error::InvalidArgument(
            "interval must be at least one second".into(),
        ));
    }
    let Some(anchor) = interval_anchor(c) else {
        return Ok(Vec::new());
    };

    let mut slots: BTreeMap<i64, Vec<&Tweet>> = BTreeMap::new();
    for t in c
        .expanded_tweets
        .iter()
        .filter(|t| t.has_hashtag(&c.traced_hashtag))
    {
        let slot = (t.created_at - anchor).num_seconds().div_euclid(step);
        slots.entry(slot).or_default().push(t);
    }
    Ok(slots
        .into_iter()
        .map(|(slot, tweets)| TemporalSlice {
            interval_start: anchor + Duration::seconds(slot * step),
            interval_length: interval,
            tweets,
        })
        .collect())
}

/// Descriptive statistics of a tweet set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionStats {
    pub tweet_count: usize,
    pub distinct_word_pct: f64,
    pub tweets_per_user_mean: f64,
    pub retweet_pct: f64,
    pub hashtags_per_tweet_var: f64,
    pub hashtags_per_tweet_std: f64,
}

/// Splits on whitespace, strips surrounding punctuation, lowercases, and drops
/// tokens left empty.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
}

pub fn inspection_stats<'a, I>(tweets: I) -> Result<InspectionStats>
where
    I: IntoIterator<Item = &'a Tweet>,
{
    let mut count = 0usize;
    let mut total_tokens = 0usize;
    let mut distinct = HashSet::new();
    let mut authors = HashSet::new();
    let mut retweets = 0usize;
    let mut tag_counts = Vec::new();
    for t in tweets {
        count += 1;
        for tok in tokenize(&t.text) {
            total_tokens += 1;
            distinct.insert(tok);
        }
        authors.insert(t.author_id.as_str());
        retweets += usize::from(t.is_retweet());
        tag_counts.push(t.hashtag_count() as f64);
    }
    if count == 0 {
        return Err(Error::EmptyInput(
            "inspection_stats needs at least one tweet",
        ));
    }

    let n = count as f64;
    let mean = tag_counts.iter().sum::<f64>() / n;
    let var = tag_counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
    let distinct_word_pct = if total_tokens == 0 {
        0.0
    } else {
        100.0 * distinct.len() as f64 / total_tokens as f64
    };
    Ok(InspectionStats {
        tweet_count: count,
        distinct_word_pct,
        tweets_per_user_mean: n / authors.len() as f64,
        retweet_pct: 100.0 * retweets as f64 / n,
        hashtags_per_tweet_var: var,
        hashtags_per_tweet_std: var.sqrt(),
    })
}

/// Mutual users of two collections.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub count: usize,
    pub pct_of_a: f64,
    /// Registration year histogram of the mutual users with a known profile.
    pub by_registration_year: BTreeMap<i32, usize>,
    pub unknown_registration: usize,
    /// Mutual users registered strictly after the cutoff date.
    pub registered_after_cutoff: usize,
}

pub fn user_overlap(a: &Collection, b: &Collection, cutoff: NaiveDate) -> OverlapReport {
    let mut report = OverlapReport {
        count: 0,
        pct_of_a: 0.0,
        by_registration_year: BTreeMap::new(),
        unknown_registration: 0,
        registered_after_cutoff: 0,
    };
    for (id, profile) in &a.users {
        let Some(other) = b.users.get(id) else {
            continue;
        };
        report.count += 1;
        match profile.as_ref().or(other.as_ref()) {
            Some(p) => {
                *report
                    .by_registration_year
                    .entry(p.registered_at.year())
                    .or_default() += 1;
                if p.registered_at > cutoff {
                    report.registered_after_cutoff += 1;
                }
            }
            None => report.unknown_registration += 1,
        }
    }
    if !a.users.is_empty() {
        report.pct_of_a = 100.0 * report.count as f64 / a.users.len() as f64;
    }
    report
}
