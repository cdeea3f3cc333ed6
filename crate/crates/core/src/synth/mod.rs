//! Seeded synthetic corpora with organized or organic posting behavior, and an
//! independent reference implementation of feature extraction.

pub mod oracle;

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Camp, LabelSet, Organization, Politicality, Tweet, UserProfile};
use crate::error::{Error, Result};
use crate::learn::derive_seed;
use crate::sentiment::LexiconScorer;

pub use oracle::oracle_extract;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorKind {
    Organized,
    Organic,
}

/// A burst of activity, in hours after the collection's start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstWindow {
    pub start_hours: f64,
    pub length_hours: f64,
}

/// Expected entity counts per tweet, and the reply probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityRates {
    /// Hashtags besides the traced one.
    pub extra_hashtags: f64,
    pub urls: f64,
    pub mentions: f64,
    pub media: f64,
    pub reply: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorProfile {
    pub kind: BehaviorKind,
    pub users: usize,
    /// Mean tweets per user inside the collection window (at least 1).
    pub tweets_per_user: f64,
    pub retweet_rate: f64,
    pub vocab_size: usize,
    pub burst_windows: Vec<BurstWindow>,
    pub registration_window: (NaiveDate, NaiveDate),
    /// Probability that a user's additional tweet carries the traced hashtag.
    pub traced_tag_focus: f64,
    pub entity_rates: EntityRates,
    /// Distinct original posts that retweets draw from.
    pub original_pool: usize,
    /// Distinct accounts that mentions draw from.
    pub mention_pool: usize,
    pub words_per_tweet: usize,
    /// Per user, expected tweets far outside the expansion window.
    pub background_rate: f64,
    pub missing_profile_rate: f64,
    /// Leaning of injected reply sentiment, in `[-1, 1]`.
    pub sentiment_bias: f64,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

impl BehaviorProfile {
    /// Few new accounts pushing copied messages in tight bursts.
    pub fn organized() -> Self {
        BehaviorProfile {
            kind: BehaviorKind::Organized,
            users: 60,
            tweets_per_user: 6.0,
            retweet_rate: 0.8,
            vocab_size: 60,
            burst_windows: vec![
                BurstWindow {
                    start_hours: 2.0,
                    length_hours: 3.0,
                },
                BurstWindow {
                    start_hours: 26.0,
                    length_hours: 2.0,
                },
            ],
            registration_window: (date(2016, 1, 1), date(2016, 8, 31)),
            traced_tag_focus: 0.85,
            entity_rates: EntityRates {
                extra_hashtags: 1.5,
                urls: 0.6,
                mentions: 0.9,
                media: 0.3,
                reply: 0.1,
            },
            original_pool: 5,
            mention_pool: 4,
            words_per_tweet: 10,
            background_rate: 0.5,
            missing_profile_rate: 0.03,
            sentiment_bias: -0.6,
        }
    }

    /// Many established accounts posting independently over several days.
    pub fn organic() -> Self {
        BehaviorProfile {
            kind: BehaviorKind::Organic,
            users: 400,
            tweets_per_user: 1.4,
            retweet_rate: 0.15,
            vocab_size: 20_000,
            burst_windows: vec![BurstWindow {
                start_hours: 0.0,
                length_hours: 96.0,
            }],
            registration_window: (date(2007, 1, 1), date(2015, 6, 30)),
            traced_tag_focus: 0.3,
            entity_rates: EntityRates {
                extra_hashtags: 0.4,
                urls: 0.3,
                mentions: 0.5,
                media: 0.15,
                reply: 0.3,
            },
            original_pool: 1000,
            mention_pool: 2000,
            words_per_tweet: 12,
            background_rate: 0.5,
            missing_profile_rate: 0.03,
            sentiment_bias: 0.0,
        }
    }

    pub fn for_kind(kind: BehaviorKind) -> Self {
        match kind {
            BehaviorKind::Organized => Self::organized(),
            BehaviorKind::Organic => Self::organic(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("retweet_rate", self.retweet_rate),
            ("traced_tag_focus", self.traced_tag_focus),
            ("entity_rates.reply", self.entity_rates.reply),
            ("missing_profile_rate", self.missing_profile_rate),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a probability, got {p}"
                )));
            }
        }
        if !(-1.0..=1.0).contains(&self.sentiment_bias) {
            return Err(Error::InvalidArgument(
                "sentiment_bias must be in [-1, 1]".into(),
            ));
        }
        let rates = [
            self.entity_rates.extra_hashtags,
            self.entity_rates.urls,
            self.entity_rates.mentions,
            self.entity_rates.media,
            self.background_rate,
        ];
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidArgument(
                "entity rates must be non-negative".into(),
            ));
        }
        if self.users == 0 || self.vocab_size == 0 || self.words_per_tweet == 0 {
            return Err(Error::InvalidArgument(
                "users, vocab_size and words_per_tweet must be positive".into(),
            ));
        }
        if self.original_pool == 0 || self.mention_pool == 0 {
            return Err(Error::InvalidArgument("pools must be non-empty".into()));
        }
        if !(self.tweets_per_user >= 1.0 && self.tweets_per_user.is_finite()) {
            return Err(Error::InvalidArgument(
                "tweets_per_user must be at least 1".into(),
            ));
        }
        if self.burst_windows.is_empty()
            || self.burst_windows.iter().any(|w| {
                w.start_hours < 0.0
                    || w.length_hours <= 0.0
                    || w.start_hours + w.length_hours > 24.0 * 6.0
            })
        {
            return Err(Error::InvalidArgument(
                "burst windows must lie within the first six days".into(),
            ));
        }
        if self.registration_window.0 > self.registration_window.1 {
            return Err(Error::InvalidArgument(
                "registration window is reversed".into(),
            ));
        }
        Ok(())
    }
}

/// One generated collection's records and its intended label.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub traced_tag: String,
    pub label: LabelSet,
    pub tweets: Vec<Tweet>,
    pub profiles: Vec<UserProfile>,
}

/// Epoch that all generated activity is placed after.
pub fn synthetic_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2016, 9, 1, 0, 0, 0).unwrap()
}

struct Gen<'a> {
    p: &'a BehaviorProfile,
    tag: &'a str,
    rng: ChaCha8Rng,
    seed: u64,
    next_id: usize,
    positive: Vec<String>,
    negative: Vec<String>,
}

impl Gen<'_> {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p.clamp(0.0, 1.0))
    }

    /// Poisson-distributed count with mean `lambda` (Knuth's method; the
    /// rates used here are small).
    fn poisson(&mut self, lambda: f64) -> usize {
        if lambda <= 0.0 {
            return 0;
        }
        let limit = (-lambda).exp();
        let mut k = 0;
        let mut prod: f64 = self.rng.gen();
        while prod > limit {
            k += 1;
            prod *= self.rng.gen::<f64>();
        }
        k
    }

    fn id(&mut self) -> String {
        self.next_id += 1;
        format!("{}-{}", self.tag, self.next_id)
    }

    fn word(rng: &mut ChaCha8Rng, vocab: usize) -> String {
        format!("w{}", rng.gen_range(0..vocab))
    }

    /// Text of original post `k`, identical wherever it is retweeted.
    fn original_text(&self, k: usize) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed ^ 0x5eed, k as u64));
        (0..self.p.words_per_tweet)
            .map(|_| Self::word(&mut rng, self.p.vocab_size))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn fresh_text(&mut self) -> String {
        (0..self.p.words_per_tweet)
            .map(|_| Self::word(&mut self.rng, self.p.vocab_size))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn mention(&mut self) -> String {
        format!(
            "{}_m{}",
            self.tag,
            self.rng.gen_range(0..self.p.mention_pool)
        )
    }

    fn sentiment_words(&mut self) -> Vec<String> {
        let n = self.rng.gen_range(1..=2);
        let p_neg = (1.0 - self.p.sentiment_bias) / 2.0;
        (0..n)
            .map(|_| {
                let pool = if self.chance(p_neg) {
                    &self.negative
                } else {
                    &self.positive
                };
                pool.choose(&mut self.rng)
                    .expect("lexicon has words")
                    .clone()
            })
            .collect()
    }

    fn burst_time(&mut self, start: DateTime<Utc>) -> DateTime<Utc> {
        let w = *self
            .p
            .burst_windows
            .choose(&mut self.rng)
            .expect("validated");
        let secs = (w.start_hours + self.rng.gen::<f64>() * w.length_hours) * 3600.0;
        start + Duration::seconds(secs as i64)
    }

    fn tweet(&mut self, author: &str, at: DateTime<Utc>, traced: bool) -> Tweet {
        let r = self.p.entity_rates;
        let mut hashtags = Vec::new();
        if traced {
            hashtags.push(self.tag.to_owned());
        }
        for _ in 0..self.poisson(r.extra_hashtags) {
            hashtags.push(format!("topic{}", self.rng.gen_range(0..20)));
        }
        let mut mentions: Vec<String> = (0..self.poisson(r.mentions))
            .map(|_| self.mention())
            .collect();

        let mut retweeted_status_id = None;
        let mut replied_user_id = None;
        let body = if self.chance(self.p.retweet_rate) {
            let k = self.rng.gen_range(0..self.p.original_pool);
            let source = format!("{}_src{}", self.tag, k % self.p.mention_pool.max(1));
            retweeted_status_id = Some(format!("{}-orig{k}", self.tag));
            mentions.insert(0, source.clone());
            format!("RT @{source}: {}", self.original_text(k))
        } else if self.chance(r.reply) {
            let target = self.mention();
            replied_user_id = Some(target.clone());
            mentions.insert(0, target.clone());
            let mut words = vec![format!("@{target}")];
            words.push(self.fresh_text());
            words.extend(self.sentiment_words());
            words.join(" ")
        } else {
            self.fresh_text()
        };

        let mut text = body;
        for m in mentions.iter().skip(usize::from(
            retweeted_status_id.is_some() || replied_user_id.is_some(),
        )) {
            text.push_str(&format!(" @{m}"));
        }
        for h in &hashtags {
            text.push_str(&format!(" #{h}"));
        }
        Tweet {
            id: self.id(),
            author_id: author.to_owned(),
            created_at: at,
            text,
            hashtags,
            mentions,
            url_count: self.poisson(r.urls) as u32,
            media_count: self.poisson(r.media) as u32,
            retweeted_status_id,
            replied_user_id,
        }
    }

    fn profile(&mut self, id: &str) -> UserProfile {
        let (lo, hi) = self.p.registration_window;
        let span = (hi - lo).num_days().max(0);
        let registered_at = lo + Duration::days(self.rng.gen_range(0..=span));
        let log_uniform = |rng: &mut ChaCha8Rng, a: f64, b: f64| -> u64 {
            (a.ln() + rng.gen::<f64>() * (b.ln() - a.ln()))
                .exp()
                .round() as u64
        };
        let (followers, following, statuses, favorites) = match self.p.kind {
            BehaviorKind::Organized => (
                log_uniform(&mut self.rng, 5.0, 300.0),
                log_uniform(&mut self.rng, 500.0, 3000.0),
                log_uniform(&mut self.rng, 2000.0, 60_000.0),
                log_uniform(&mut self.rng, 1.0, 500.0),
            ),
            BehaviorKind::Organic => (
                log_uniform(&mut self.rng, 10.0, 5000.0),
                log_uniform(&mut self.rng, 50.0, 1500.0),
                log_uniform(&mut self.rng, 50.0, 20_000.0),
                log_uniform(&mut self.rng, 10.0, 30_000.0),
            ),
        };
        UserProfile {
            id: id.to_owned(),
            registered_at,
            follower_count: followers,
            following_count: following,
            status_count: statuses,
            favorite_count: favorites,
        }
    }
}

/// Generates one collection's tweets and profiles. Every user posts the
/// traced hashtag at least once; the profile's burst windows place the
/// activity, and each user also gets tweets well outside the expansion
/// window. A few unrelated accounts post without the tag.
pub fn generate_collection(
    profile: &BehaviorProfile,
    traced_tag: &str,
    seed: u64,
) -> Result<SyntheticCorpus> {
    profile.validate()?;
    let tag = crate::corpus::normalize_hashtag(traced_tag);
    if tag.is_empty() {
        return Err(Error::InvalidArgument("traced hashtag is empty".into()));
    }
    let lexicon = LexiconScorer::default();
    let mut g = Gen {
        p: profile,
        tag: &tag,
        rng: ChaCha8Rng::seed_from_u64(seed),
        seed,
        next_id: 0,
        positive: lexicon.words(1).into_iter().map(str::to_owned).collect(),
        negative: lexicon.words(-1).into_iter().map(str::to_owned).collect(),
    };

    let start = synthetic_epoch() + Duration::hours(g.rng.gen_range(0..24 * 90));
    let mut tweets = Vec::new();
    let mut profiles = Vec::new();
    for u in 0..profile.users {
        let user = format!("{tag}_u{u}");
        if u == 0 || !g.chance(profile.missing_profile_rate) {
            let p = g.profile(&user);
            profiles.push(p);
        }
        let extra = g.poisson(profile.tweets_per_user - 1.0);
        let first = g.burst_time(start);
        tweets.push(g.tweet(&user, first, true));
        let mut earliest = first;
        for _ in 0..extra {
            let at = g.burst_time(start);
            earliest = earliest.min(at);
            let traced = g.chance(profile.traced_tag_focus);
            tweets.push(g.tweet(&user, at, traced));
        }
        for _ in 0..g.poisson(profile.background_rate) {
            let days_before = g.rng.gen_range(8..30);
            let at = earliest
                - Duration::days(days_before)
                - Duration::seconds(g.rng.gen_range(0..86_400));
            tweets.push(g.tweet(&user, at, false));
        }
    }
    for b in 0..(profile.users / 10).max(1) {
        let user = format!("{tag}_bystander{b}");
        let at = g.burst_time(start);
        tweets.push(g.tweet(&user, at, false));
        let p = g.profile(&user);
        profiles.push(p);
    }
    tweets.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
    profiles.sort_by(|a, b| a.id.cmp(&b.id));

    let political = g.chance(0.5);
    let camp = if political {
        *[Camp::ProHillary, Camp::ProTrump, Camp::Neither]
            .choose(&mut g.rng)
            .expect("non-empty")
    } else {
        Camp::Neither
    };
    let label = LabelSet {
        organization: Some(match profile.kind {
            BehaviorKind::Organized => Organization::Organized,
            BehaviorKind::Organic => Organization::Organic,
        }),
        politicality: Some(if political {
            Politicality::Political
        } else {
            Politicality::NonPolitical
        }),
        camp: Some(camp),
    };
    Ok(SyntheticCorpus {
        traced_tag: tag,
        label,
        tweets,
        profiles,
    })
}

impl SyntheticCorpus {
    pub fn write_tweets<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.tweets {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n").map_err(|e| Error::io("<tweets>", e))?;
        }
        Ok(())
    }

    pub fn write_profiles<W: Write>(&self, mut w: W) -> Result<()> {
        for p in &self.profiles {
            serde_json::to_writer(&mut w, p)?;
            w.write_all(b"\n").map_err(|e| Error::io("<profiles>", e))?;
        }
        Ok(())
    }

    /// Writes `<stem>.tweets.jsonl` and `<stem>.users.jsonl` into `dir`.
    pub fn write_to(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut buf = Vec::new();
        self.write_tweets(&mut buf)?;
        let path = dir.join(format!("{stem}.tweets.jsonl"));
        fs::write(&path, &buf).map_err(|e| Error::io(&path, e))?;
        buf.clear();
        self.write_profiles(&mut buf)?;
        let path = dir.join(format!("{stem}.users.jsonl"));
        fs::write(&path, &buf).map_err(|e| Error::io(&path, e))
    }
}

/// Settings for a labeled batch of collections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub organized: usize,
    pub organic: usize,
    pub seed: u64,
    /// Multiplies each profile's user count by a factor drawn from this range.
    pub size_jitter: (f64, f64),
}

impl Default for BatchSpec {
    fn default() -> Self {
        BatchSpec {
            organized: 100,
            organic: 100,
            seed: 42,
            size_jitter: (0.5, 1.5),
        }
    }
}

/// Generates `organized + organic` collections tagged `synorg{i}` and
/// `synnat{i}`, each from its own derived seed and a jittered profile.
pub fn generate_batch(spec: &BatchSpec) -> Result<Vec<SyntheticCorpus>> {
    let (lo, hi) = spec.size_jitter;
    if !(lo > 0.0 && lo <= hi) {
        return Err(Error::InvalidArgument(
            "size_jitter must satisfy 0 < lo <= hi".into(),
        ));
    }
    let mut out = Vec::with_capacity(spec.organized + spec.organic);
    let jobs = (0..spec.organized)
        .map(|i| (BehaviorKind::Organized, i))
        .chain((0..spec.organic).map(|i| (BehaviorKind::Organic, i)));
    for (n, (kind, i)) in jobs.enumerate() {
        let seed = derive_seed(spec.seed, n as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut profile = BehaviorProfile::for_kind(kind);
        let factor = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        profile.users = ((profile.users as f64 * factor).round() as usize).max(2);
        let tag = match kind {
            BehaviorKind::Organized => format!("synorg{i}"),
            BehaviorKind::Organic => format!("synnat{i}"),
        };
        out.push(generate_collection(&profile, &tag, rng.gen())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_collection, inspection_stats, TweetStore};

    #[test]
    fn deterministic_bytes() {
        let p = BehaviorProfile::organized();
        let a = generate_collection(&p, "x", 5).unwrap();
        let b = generate_collection(&p, "x", 5).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.write_tweets(&mut ba).unwrap();
        b.write_tweets(&mut bb).unwrap();
        assert_eq!(ba, bb);
        let c = generate_collection(&p, "x", 6).unwrap();
        assert_ne!(a.tweets, c.tweets);
    }

    #[test]
    fn background_tweets_stay_outside_the_collection() {
        let c = generate_collection(&BehaviorProfile::organic(), "y", 1).unwrap();
        let store = TweetStore::from_records(c.tweets.clone(), c.profiles.clone());
        let col = build_collection(&store, "y", 7).unwrap();
        let bystanders = col
            .expanded_tweets
            .iter()
            .filter(|t| t.author_id.contains("bystander"));
        assert_eq!(bystanders.count(), 0);
        assert!(col.expanded_tweets.len() < c.tweets.len());
        assert_eq!(col.users.len(), BehaviorProfile::organic().users);
        let stats = inspection_stats(&col.seed_tweets).unwrap();
        assert!(stats.tweets_per_user_mean < 1.3);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let mut p = BehaviorProfile::organic();
        p.retweet_rate = 1.5;
        assert!(generate_collection(&p, "z", 0).is_err());
        let mut p = BehaviorProfile::organic();
        p.burst_windows.clear();
        assert!(p.validate().is_err());
    }
}
