//! Five-class sentiment scoring for reply tweets.

use std::collections::HashMap;
use std::fmt;

use crate::corpus::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sentiment {
    VeryNegative,
    Negative,
    Neutral,
    Positive,
    VeryPositive,
}

impl Sentiment {
    pub const ALL: [Sentiment; 5] = [
        Sentiment::VeryNegative,
        Sentiment::Negative,
        Sentiment::Neutral,
        Sentiment::Positive,
        Sentiment::VeryPositive,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::VeryNegative => "very_negative",
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
            Sentiment::Positive => "positive",
            Sentiment::VeryPositive => "very_positive",
        }
    }

    /// Maps a summed lexicon score onto a class: `<= -2, -1, 0, +1, >= +2`.
    pub fn from_score(score: i32) -> Self {
        match score {
            i32::MIN..=-2 => Sentiment::VeryNegative,
            -1 => Sentiment::Negative,
            0 => Sentiment::Neutral,
            1 => Sentiment::Positive,
            _ => Sentiment::VeryPositive,
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Deterministic text → class mapping. Must be safe to share across threads.
pub trait SentimentScorer: Send + Sync {
    fn score(&self, text: &str) -> Sentiment;
}

impl<F> SentimentScorer for F
where
    F: Fn(&str) -> Sentiment + Send + Sync,
{
    fn score(&self, text: &str) -> Sentiment {
        self(text)
    }
}

const DEFAULT_LEXICON: &[(&str, i32)] = &[
    ("awful", -2),
    ("bad", -1),
    ("corrupt", -2),
    ("crooked", -1),
    ("disgrace", -2),
    ("disgusting", -2),
    ("fail", -1),
    ("fake", -1),
    ("hate", -2),
    ("liar", -2),
    ("lies", -1),
    ("loser", -1),
    ("sad", -1),
    ("shame", -1),
    ("terrible", -2),
    ("wrong", -1),
    ("agree", 1),
    ("amazing", 2),
    ("best", 2),
    ("excellent", 2),
    ("good", 1),
    ("great", 1),
    ("happy", 1),
    ("hope", 1),
    ("love", 2),
    ("nice", 1),
    ("proud", 1),
    ("thanks", 1),
    ("win", 1),
    ("wonderful", 2),
];

/// Sums signed word weights over the tokens of a text.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    weights: HashMap<String, i32>,
}

impl LexiconScorer {
    pub fn new(weights: impl IntoIterator<Item = (String, i32)>) -> Self {
        LexiconScorer {
            weights: weights.into_iter().collect(),
        }
    }

    pub fn raw_score(&self, text: &str) -> i32 {
        tokenize(text).filter_map(|t| self.weights.get(&t)).sum()
    }

    pub fn words(&self, sign: i32) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .weights
            .iter()
            .filter(|(_, &w)| w.signum() == sign.signum())
            .map(|(k, _)| k.as_str())
            .collect();
        out.sort_unstable();
        out
    }
}

impl Default for LexiconScorer {
    fn default() -> Self {
        Self::new(DEFAULT_LEXICON.iter().map(|&(w, s)| (w.to_owned(), s)))
    }
}

impl SentimentScorer for LexiconScorer {
    fn score(&self, text: &str) -> Sentiment {
        Sentiment::from_score(self.raw_score(text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(Sentiment::from_score(-7), Sentiment::VeryNegative);
        assert_eq!(Sentiment::from_score(-2), Sentiment::VeryNegative);
        assert_eq!(Sentiment::from_score(-1), Sentiment::Negative);
        assert_eq!(Sentiment::from_score(0), Sentiment::Neutral);
        assert_eq!(Sentiment::from_score(1), Sentiment::Positive);
        assert_eq!(Sentiment::from_score(2), Sentiment::VeryPositive);
    }

    #[test]
    fn lexicon_scoring() {
        let s = LexiconScorer::default();
        assert_eq!(s.score("@bob you are a LIAR!"), Sentiment::VeryNegative);
        assert_eq!(s.score("so sad"), Sentiment::Negative);
        assert_eq!(s.score("the weather"), Sentiment::Neutral);
        assert_eq!(s.score("good, good"), Sentiment::VeryPositive);
        assert_eq!(s.score("good but bad"), Sentiment::Neutral);
        assert!(s.words(-1).contains(&"liar"));
    }
}
