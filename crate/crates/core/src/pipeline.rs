//! Collection → feature row, end to end.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use rayon::prelude::*;

use crate::corpus::{
    build_collection, normalize_hashtag, partition_intervals, Camp, Collection, LabelSet,
    Organization, Politicality, TweetStore,
};
use crate::error::{Error, Result};
use crate::sentiment::SentimentScorer;
use crate::summarization::{summarize_collection, FeatureRow, FeatureSchema};
use crate::temporal_features::{extract_temporal_features, SliceFeatureVector};
use crate::user_features::{extract_user_features, UserExtraction};

/// Parameters of feature extraction that are not part of the schema.
#[derive(Clone, Copy)]
pub struct ExtractParams<'a> {
    pub today: NaiveDate,
    pub interval: Duration,
    pub schema: &'a FeatureSchema,
    pub scorer: &'a dyn SentimentScorer,
}

/// Intermediate vectors kept alongside the row, for histograms and debugging.
#[derive(Debug, Clone)]
pub struct CollectionFeatures {
    pub users: UserExtraction,
    pub slices: Vec<SliceFeatureVector>,
    pub row: FeatureRow,
}

pub fn extract_collection(
    c: &Collection,
    params: &ExtractParams<'_>,
) -> Result<CollectionFeatures> {
    let users = extract_user_features(c, params.today, params.schema.registration.cutoff);
    let slices = partition_intervals(c, params.interval)?;
    let slices = extract_temporal_features(&slices, params.scorer)?;
    let row = summarize_collection(&c.traced_hashtag, c.label, &users, &slices, params.schema)?;
    Ok(CollectionFeatures { users, slices, row })
}

pub fn extract_row(c: &Collection, params: &ExtractParams<'_>) -> Result<FeatureRow> {
    extract_collection(c, params).map(|f| f.row)
}

/// Extracts rows for several hashtags in parallel, in the given order.
/// Labels are looked up by normalized hashtag.
pub fn extract_rows(
    store: &TweetStore,
    hashtags: &[String],
    labels: &BTreeMap<String, LabelSet>,
    window_days: u32,
    params: &ExtractParams<'_>,
) -> Result<Vec<FeatureRow>> {
    hashtags
        .par_iter()
        .map(|tag| {
            let tag = normalize_hashtag(tag);
            let label = labels.get(&tag).copied().unwrap_or_default();
            let c = build_collection(store, &tag, window_days)?.with_label(label);
            extract_row(&c, params)
        })
        .collect()
}

pub const LABEL_FILE_COLUMNS: [&str; 4] = ["hashtag", "organization", "politicality", "camp"];

fn optional<T: FromStr<Err = Error>>(raw: &str) -> Result<Option<T>> {
    let raw = raw.trim();
    if raw.is_empty() {
        Ok(None)
    } else {
        raw.parse().map(Some)
    }
}

/// Reads a `hashtag,organization,politicality,camp` CSV. Empty cells are
/// missing labels; hashtags are normalized.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, LabelSet>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    if r.headers()?.iter().map(str::trim).ne(LABEL_FILE_COLUMNS) {
        return Err(Error::InvalidArgument(format!(
            "{} must have the header {}",
            path.display(),
            LABEL_FILE_COLUMNS.join(",")
        )));
    }
    let mut out = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let tag = normalize_hashtag(&record[0]);
        if tag.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{}: empty hashtag",
                path.display()
            )));
        }
        let label = LabelSet {
            organization: optional::<Organization>(&record[1])?,
            politicality: optional::<Politicality>(&record[2])?,
            camp: optional::<Camp>(&record[3])?,
        };
        out.insert(tag, label);
    }
    Ok(out)
}

pub fn write_labels<W: Write>(out: W, labels: &BTreeMap<String, LabelSet>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LABEL_FILE_COLUMNS)?;
    for (tag, l) in labels {
        w.write_record([
            tag.as_str(),
            l.organization.map_or("", Organization::as_str),
            l.politicality.map_or("", Politicality::as_str),
            l.camp.map_or("", Camp::as_str),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<labels>", e))?;
    Ok(())
}
