//! Collapse per-user and per-slice vectors into one fixed-width row per
//! collection.
//!
//! User features contribute a bucket histogram (percent of users per bucket)
//! followed by five distribution statistics. Temporal features contribute only
//! the statistics. The row closes with the registration-year histogram, the
//! share of users registered after the cutoff, and the share of users that had
//! no profile.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{default_cutoff, Camp, LabelSet, Organization, Politicality};
use crate::error::{Error, Result};
use crate::temporal_features::{SliceFeatureVector, TEMPORAL_FEATURE_NAMES};
use crate::user_features::{
    UserExtraction, UserFeatureVector, TRACED_USER_FEATURES, USER_FEATURE_NAMES,
};

pub const SCHEMA_VERSION: u32 = 1;

/// One bucket: an interval with optional open upper end. A point is `[v, v]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub label: String,
    pub lo: f64,
    pub lo_closed: bool,
    /// `None` means unbounded above.
    pub hi: Option<f64>,
    pub hi_closed: bool,
}

impl Bucket {
    pub fn point(v: f64) -> Self {
        Bucket {
            label: format!("eq{}", fmt_num(v)),
            lo: v,
            lo_closed: true,
            hi: Some(v),
            hi_closed: true,
        }
    }

    /// `(lo, hi]`
    pub fn left_open(lo: f64, hi: f64) -> Self {
        Bucket {
            label: format!("{}-{}", fmt_num(lo), fmt_num(hi)),
            lo,
            lo_closed: false,
            hi: Some(hi),
            hi_closed: true,
        }
    }

    /// `[lo, hi)`
    pub fn right_open(label: impl Into<String>, lo: f64, hi: f64) -> Self {
        Bucket {
            label: label.into(),
            lo,
            lo_closed: true,
            hi: Some(hi),
            hi_closed: false,
        }
    }

    /// `(lo, ∞)` or `[lo, ∞)`.
    pub fn above(label: impl Into<String>, lo: f64, closed: bool) -> Self {
        Bucket {
            label: label.into(),
            lo,
            lo_closed: closed,
            hi: None,
            hi_closed: false,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above_lo = if self.lo_closed {
            v >= self.lo
        } else {
            v > self.lo
        };
        let below_hi = match self.hi {
            None => true,
            Some(hi) if self.hi_closed => v <= hi,
            Some(hi) => v < hi,
        };
        above_lo && below_hi
    }
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Ordered, mutually exclusive buckets covering `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketScheme {
    pub buckets: Vec<Bucket>,
}

impl BucketScheme {
    /// Per-tweet ratios: `=0, (0,0.5], (0.5,0.9], (0.9,1), =1, (1,2], …, (9,10], >10`.
    pub fn ratio() -> Self {
        let mut buckets = vec![
            Bucket::point(0.0),
            Bucket::left_open(0.0, 0.5),
            Bucket::left_open(0.5, 0.9),
            Bucket {
                label: "0.9-1".into(),
                lo: 0.9,
                lo_closed: false,
                hi: Some(1.0),
                hi_closed: false,
            },
            Bucket::point(1.0),
        ];
        buckets.extend((1..10).map(|k| Bucket::left_open(k as f64, (k + 1) as f64)));
        buckets.push(Bucket::above("gt10", 10.0, false));
        BucketScheme { buckets }
    }

    /// Integer counts: `<1, 1, 2, …, 10, 11-20, 21-50, 51-100, >100`.
    pub fn count() -> Self {
        let mut buckets = vec![Bucket::right_open("lt1", 0.0, 1.0)];
        buckets.extend(
            (1..=10).map(|k| Bucket::right_open(format!("eq{k}"), k as f64, (k + 1) as f64)),
        );
        buckets.push(Bucket::right_open("11-20", 11.0, 21.0));
        buckets.push(Bucket::right_open("21-50", 21.0, 51.0));
        buckets.push(Bucket::right_open("51-100", 51.0, 101.0));
        buckets.push(Bucket::above("gt100", 101.0, true));
        BucketScheme { buckets }
    }

    /// Large account counters.
    pub fn profile_counter() -> Self {
        BucketScheme {
            buckets: vec![
                Bucket::right_open("eq0", 0.0, 1.0),
                Bucket::right_open("1-100", 1.0, 101.0),
                Bucket::right_open("101-1000", 101.0, 1_001.0),
                Bucket::right_open("1001-10000", 1_001.0, 10_001.0),
                Bucket::right_open("10001-20000", 10_001.0, 20_001.0),
                Bucket::right_open("20001-50000", 20_001.0, 50_001.0),
                Bucket::above("gt50000", 50_001.0, true),
            ],
        }
    }

    /// Quarters of `[0, 1]` with the end points on their own. The last bucket
    /// also absorbs anything above 1, which the degree itself never produces.
    pub fn unit_fraction() -> Self {
        BucketScheme {
            buckets: vec![
                Bucket::point(0.0),
                Bucket::left_open(0.0, 0.25),
                Bucket::left_open(0.25, 0.5),
                Bucket::left_open(0.5, 0.75),
                Bucket {
                    label: "0.75-1".into(),
                    lo: 0.75,
                    lo_closed: false,
                    hi: Some(1.0),
                    hi_closed: false,
                },
                Bucket::above("eq1", 1.0, true),
            ],
        }
    }

    /// Checks that the buckets tile `[0, ∞)` without gaps or overlaps.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::SchemaMismatch(msg));
        let Some(first) = self.buckets.first() else {
            return bad("bucket scheme is empty".into());
        };
        if first.lo != 0.0 || !first.lo_closed {
            return bad(format!(
                "first bucket `{}` must start at a closed 0",
                first.label
            ));
        }
        for pair in self.buckets.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            match a.hi {
                Some(hi) if hi == b.lo && a.hi_closed != b.lo_closed => {}
                _ => {
                    return bad(format!(
                        "buckets `{}` and `{}` are not contiguous",
                        a.label, b.label
                    ))
                }
            }
        }
        for b in &self.buckets {
            match b.hi {
                Some(hi) if hi < b.lo || (hi == b.lo && !(b.lo_closed && b.hi_closed)) => {
                    return bad(format!("bucket `{}` is empty", b.label));
                }
                None if !std::ptr::eq(b, self.buckets.last().unwrap()) => {
                    return bad(format!("unbounded bucket `{}` is not last", b.label));
                }
                _ => {}
            }
        }
        if self.buckets.last().unwrap().hi.is_some() {
            return bad("last bucket must be unbounded".into());
        }
        Ok(())
    }

    pub fn locate(&self, v: f64) -> Option<usize> {
        let idx = self.buckets.partition_point(|b| match b.hi {
            Some(hi) if b.hi_closed => hi < v,
            Some(hi) => hi <= v,
            None => false,
        });
        (idx < self.buckets.len() && self.buckets[idx].contains(v)).then_some(idx)
    }
}

/// Percentages of `values` per bucket, in scheme order. Empty input yields all
/// zeros.
pub fn bucketize(feature: &str, values: &[f64], scheme: &BucketScheme) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; scheme.buckets.len()];
    for &v in values {
        let idx = scheme.locate(v).ok_or_else(|| Error::Uncovered {
            feature: feature.to_owned(),
            value: v,
        })?;
        counts[idx] += 1;
    }
    if values.is_empty() {
        return Ok(vec![0.0; counts.len()]);
    }
    let n = values.len() as f64;
    Ok(counts.into_iter().map(|c| 100.0 * c as f64 / n).collect())
}

/// Population moments and range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureStats {
    pub mean: f64,
    pub var: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub const STAT_NAMES: [&str; 5] = ["mean", "var", "std", "min", "max"];

impl FeatureStats {
    pub fn as_array(&self) -> [f64; 5] {
        [self.mean, self.var, self.std, self.min, self.max]
    }
}

pub fn feature_stats(values: &[f64]) -> Result<FeatureStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput("feature_stats needs at least one value"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    Ok(FeatureStats {
        mean,
        var,
        std: var.sqrt(),
        min,
        max,
    })
}

/// A bucketed user feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFeatureSpec {
    pub name: String,
    pub buckets: BucketScheme,
    /// Derived from the traced hashtag; dropped by the ablation variants.
    pub traced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationSpec {
    pub first_year: i32,
    pub last_year: i32,
    pub cutoff: NaiveDate,
}

impl RegistrationSpec {
    pub fn labels(&self) -> Vec<String> {
        let mut out = vec![format!("lt{}", self.first_year)];
        out.extend((self.first_year..=self.last_year).map(|y| y.to_string()));
        out.push(format!("gt{}", self.last_year));
        out
    }

    pub fn bin(&self, date: NaiveDate) -> usize {
        let y = date.year();
        if y < self.first_year {
            0
        } else if y > self.last_year {
            (self.last_year - self.first_year + 2) as usize
        } else {
            (y - self.first_year + 1) as usize
        }
    }
}

/// Layout of a feature row: which features, in which order, with which buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub user_features: Vec<UserFeatureSpec>,
    pub temporal_features: Vec<String>,
    pub registration: RegistrationSpec,
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::with_cutoff(default_cutoff())
    }
}

/// Description of one output column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub traced: bool,
}

impl FeatureSchema {
    pub fn with_cutoff(cutoff: NaiveDate) -> Self {
        let user_features = USER_FEATURE_NAMES
            .iter()
            .map(|&name| {
                let buckets = match name {
                    "tweet_count" | "favorite_count" => BucketScheme::profile_counter(),
                    "follower_degree" => BucketScheme::unit_fraction(),
                    "traced_hashtag_use" => BucketScheme::count(),
                    _ => BucketScheme::ratio(),
                };
                UserFeatureSpec {
                    name: name.to_owned(),
                    buckets,
                    traced: TRACED_USER_FEATURES.contains(&name),
                }
            })
            .collect();
        FeatureSchema {
            version: SCHEMA_VERSION,
            user_features,
            temporal_features: TEMPORAL_FEATURE_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            registration: RegistrationSpec {
                first_year: 2006,
                last_year: 2026,
                cutoff,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for f in &self.user_features {
            if !USER_FEATURE_NAMES.contains(&f.name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "unknown user feature `{}`",
                    f.name
                )));
            }
            f.buckets.validate()?;
        }
        for f in &self.temporal_features {
            if !TEMPORAL_FEATURE_NAMES.contains(&f.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "unknown temporal feature `{f}`"
                )));
            }
        }
        if self.registration.first_year > self.registration.last_year {
            return Err(Error::SchemaMismatch(
                "registration years are reversed".into(),
            ));
        }
        Ok(())
    }

    pub fn columns(&self) -> Vec<ColumnSpec> {
        let mut out = Vec::new();
        for f in &self.user_features {
            for b in &f.buckets.buckets {
                out.push(ColumnSpec {
                    name: format!("user.{}.bucket.{}", f.name, b.label),
                    traced: f.traced,
                });
            }
            for stat in STAT_NAMES {
                out.push(ColumnSpec {
                    name: format!("user.{}.{stat}", f.name),
                    traced: f.traced,
                });
            }
        }
        for f in &self.temporal_features {
            for stat in STAT_NAMES {
                out.push(ColumnSpec {
                    name: format!("temporal.{f}.{stat}"),
                    traced: false,
                });
            }
        }
        for label in self.registration.labels() {
            out.push(ColumnSpec {
                name: format!("user.registration.year.{label}"),
                traced: false,
            });
        }
        out.push(ColumnSpec {
            name: "user.registration.after_cutoff_pct".into(),
            traced: false,
        });
        out.push(ColumnSpec {
            name: "diag.incomplete_user_pct".into(),
            traced: false,
        });
        out
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns().into_iter().map(|c| c.name).collect()
    }

    /// Hex SHA-256 of the schema's canonical JSON.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn document(&self) -> SchemaDocument {
        SchemaDocument {
            hash: self.hash(),
            schema: self.clone(),
            columns: self.columns(),
        }
    }

    /// Loads either a bare schema or a sidecar document written by
    /// [`SchemaDocument::write`].
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&raw)?;
        let schema: FeatureSchema = match value.get("schema") {
            Some(inner) => serde_json::from_value(inner.clone())?,
            None => serde_json::from_value(value)?,
        };
        schema.validate()?;
        Ok(schema)
    }
}

/// The JSON sidecar written next to a feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDocument {
    pub hash: String,
    pub schema: FeatureSchema,
    pub columns: Vec<ColumnSpec>,
}

impl SchemaDocument {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: SchemaDocument = serde_json::from_str(&raw)?;
        if doc.schema.hash() != doc.hash {
            return Err(Error::SchemaMismatch(format!(
                "{} declares hash {} but its schema hashes to {}",
                path.display(),
                doc.hash,
                doc.schema.hash()
            )));
        }
        Ok(doc)
    }
}

/// Diagnostics attached to a row; not part of the feature columns.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RowMeta {
    pub schema_hash: String,
    pub users: usize,
    pub incomplete_users: usize,
    pub slices: usize,
    /// Feature name → number of vectors in which it was defined as 0.
    pub zero_denominators: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRow {
    pub collection_id: String,
    #[serde(skip)]
    pub labels: LabelSet,
    pub columns: Vec<String>,
    pub values: Vec<f64>,
    pub meta: RowMeta,
}

impl FeatureRow {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.values[i])
    }

    pub fn width(&self) -> usize {
        self.values.len()
    }
}

pub fn summarize_collection(
    collection_id: &str,
    labels: LabelSet,
    users: &UserExtraction,
    slices: &[SliceFeatureVector],
    schema: &FeatureSchema,
) -> Result<FeatureRow> {
    if users.vectors.is_empty() {
        return Err(Error::EmptyInput("no user with a complete profile"));
    }
    if slices.is_empty() {
        return Err(Error::EmptyInput("no temporal slice"));
    }

    let mut values = Vec::new();
    for spec in &schema.user_features {
        let column = user_column(&users.vectors, &spec.name)?;
        values.extend(bucketize(&spec.name, &column, &spec.buckets)?);
        values.extend(feature_stats(&column)?.as_array());
    }
    for name in &schema.temporal_features {
        let column = slices
            .iter()
            .map(|s| s.get(name))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::SchemaMismatch(format!("unknown temporal feature `{name}`")))?;
        values.extend(feature_stats(&column)?.as_array());
    }

    let reg = &schema.registration;
    let mut years = vec![0usize; reg.labels().len()];
    let mut after = 0usize;
    for v in &users.vectors {
        years[reg.bin(v.registered_at)] += 1;
        after += usize::from(v.registered_at > reg.cutoff);
    }
    let n = users.vectors.len() as f64;
    values.extend(years.iter().map(|&c| 100.0 * c as f64 / n));
    values.push(100.0 * after as f64 / n);
    values.push(100.0 * users.incomplete.len() as f64 / users.total_users() as f64);

    let columns = schema.column_names();
    debug_assert_eq!(columns.len(), values.len());
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Degenerate(format!(
            "column `{}` is not finite ({v})",
            columns[i]
        )));
    }

    let mut zero_denominators = BTreeMap::new();
    if users.undefined_comparisons > 0 {
        zero_denominators.insert(
            "user.daily_comparison".to_owned(),
            users.undefined_comparisons,
        );
    }
    for s in slices {
        for name in &s.undefined {
            *zero_denominators
                .entry(format!("temporal.{name}"))
                .or_default() += 1;
        }
    }

    Ok(FeatureRow {
        collection_id: collection_id.to_owned(),
        labels,
        columns,
        values,
        meta: RowMeta {
            schema_hash: schema.hash(),
            users: users.vectors.len(),
            incomplete_users: users.incomplete.len(),
            slices: slices.len(),
            zero_denominators,
        },
    })
}

fn user_column(vectors: &[UserFeatureVector], name: &str) -> Result<Vec<f64>> {
    vectors
        .iter()
        .map(|v| v.get(name))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::SchemaMismatch(format!("unknown user feature `{name}`")))
}

pub const LABEL_COLUMNS: [&str; 3] = ["organization", "politicality", "camp"];

/// Writes rows as CSV: three label columns, the collection id, then features.
pub fn write_rows_csv<W: Write>(out: W, schema: &FeatureSchema, rows: &[FeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = LABEL_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.push("collection_id".into());
    header.extend(schema.column_names());
    w.write_record(&header)?;
    let hash = schema.hash();
    for row in rows {
        if row.meta.schema_hash != hash {
            return Err(Error::SchemaMismatch(format!(
                "row `{}` was built with schema {}",
                row.collection_id, row.meta.schema_hash
            )));
        }
        let mut record = vec![
            row.labels
                .organization
                .map(Organization::as_str)
                .unwrap_or("")
                .to_owned(),
            row.labels
                .politicality
                .map(Politicality::as_str)
                .unwrap_or("")
                .to_owned(),
            row.labels.camp.map(Camp::as_str).unwrap_or("").to_owned(),
            row.collection_id.clone(),
        ];
        record.extend(row.values.iter().map(|v| format_value(*v)));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    let mut s = String::new();
    write!(s, "{v:?}").unwrap();
    s
}

/// A feature CSV read back into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub collection_ids: Vec<String>,
    pub labels: Vec<LabelSet>,
    pub rows: Vec<Vec<f64>>,
}

fn parse_label<T: std::str::FromStr<Err = Error>>(raw: &str) -> Result<Option<T>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        raw.parse().map(Some)
    }
}

pub fn read_rows_csv(path: &Path) -> Result<FeatureTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    if header.len() < 4 || header.iter().take(3).ne(LABEL_COLUMNS) || &header[3] != "collection_id"
    {
        return Err(Error::SchemaMismatch(format!(
            "{} is not a feature CSV",
            path.display()
        )));
    }
    let columns: Vec<String> = header.iter().skip(4).map(str::to_owned).collect();
    let mut table = FeatureTable {
        columns,
        collection_ids: Vec::new(),
        labels: Vec::new(),
        rows: Vec::new(),
    };
    for record in r.records() {
        let record = record?;
        table.labels.push(LabelSet {
            organization: parse_label(&record[0])?,
            politicality: parse_label(&record[1])?,
            camp: parse_label(&record[2])?,
        });
        table.collection_ids.push(record[3].to_owned());
        let values = record
            .iter()
            .skip(4)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("non-numeric feature value `{s}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != table.columns.len() {
            return Err(Error::WidthMismatch {
                expected: table.columns.len(),
                got: values.len(),
            });
        }
        table.rows.push(values);
    }
    Ok(table)
}
