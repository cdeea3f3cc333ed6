//! C ABI over the collusion-kit library.
//!
//! Objects are opaque handles created by `ck_*_load`/`ck_*_build` functions
//! and released by the matching `ck_*_free`. Fallible calls return a
//! [`CkStatus`]; on failure [`ck_last_error`] describes the error until the
//! next failing call on the same thread. Strings returned as `char *` are
//! owned by the caller and released with [`ck_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use chrono::Duration;
use collusion_kit::corpus::{build_collection, inspection_stats, Collection, TweetStore};
use collusion_kit::learn::TrainedModel;
use collusion_kit::pipeline::{extract_row, ExtractParams};
use collusion_kit::sentiment::LexiconScorer;
use collusion_kit::summarization::{FeatureRow, FeatureSchema};
use collusion_kit::Error;

/// Result of every fallible call. Library errors keep the numeric codes the
/// command-line tool uses as exit statuses.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Panic = 3,
    OutOfRange = 4,
    Io = 10,
    EmptyCorpus = 11,
    UnknownHashtag = 12,
    InvalidArgument = 13,
    EmptyInput = 14,
    Uncovered = 15,
    SchemaMismatch = 16,
    Unsupported = 17,
    Degenerate = 18,
    WidthMismatch = 19,
    Container = 20,
    Json = 21,
    Csv = 22,
}

impl From<&Error> for CkStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => CkStatus::Io,
            Error::EmptyCorpus(_) => CkStatus::EmptyCorpus,
            Error::UnknownHashtag(_) => CkStatus::UnknownHashtag,
            Error::InvalidArgument(_) => CkStatus::InvalidArgument,
            Error::EmptyInput(_) => CkStatus::EmptyInput,
            Error::Uncovered { .. } => CkStatus::Uncovered,
            Error::SchemaMismatch(_) => CkStatus::SchemaMismatch,
            Error::Unsupported(_) => CkStatus::Unsupported,
            Error::Degenerate(_) => CkStatus::Degenerate,
            Error::WidthMismatch { .. } => CkStatus::WidthMismatch,
            Error::Container(_) => CkStatus::Container,
            Error::Json(_) => CkStatus::Json,
            Error::Csv(_) => CkStatus::Csv,
        }
    }
}

/// Loaded, indexed corpus.
pub struct CkStore(TweetStore);

/// Seed and expanded tweet sets of one traced hashtag.
pub struct CkCollection(Collection);

/// One collection's feature row under the built-in schema.
pub struct CkRow {
    row: FeatureRow,
    columns: Vec<CString>,
}

/// A saved model.
pub struct CkModel(TrainedModel);

/// Descriptive statistics of a collection's seed tweets.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CkInspection {
    pub tweet_count: usize,
    pub distinct_word_pct: f64,
    pub tweets_per_user_mean: f64,
    pub retweet_pct: f64,
    pub hashtags_per_tweet_var: f64,
    pub hashtags_per_tweet_std: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: CkStatus, msg: impl Into<Vec<u8>>) -> CkStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> CkStatus {
    fail(CkStatus::from(&e), e.to_string())
}

/// Runs `f`, turning panics into [`CkStatus::Panic`].
fn guard(f: impl FnOnce() -> CkStatus) -> CkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CkStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, CkStatus> {
    if p.is_null() {
        return Err(fail(CkStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CkStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

macro_rules! handle {
    ($p:expr, $what:literal) => {
        match unsafe { $p.as_ref() } {
            Some(h) => h,
            None => return fail(CkStatus::NullPointer, concat!($what, " is null")),
        }
    };
}

macro_rules! out_ptr {
    ($p:expr) => {
        if $p.is_null() {
            return fail(CkStatus::NullPointer, "output pointer is null");
        }
    };
}

macro_rules! try_ck {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Message of the last failing call on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn ck_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ck_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ck_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a JSONL file or a directory of JSONL files.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_store_load(path: *const c_char, out: *mut *mut CkStore) -> CkStatus {
    guard(|| {
        out_ptr!(out);
        let path = try_ck!(str_arg(path, "path"));
        match TweetStore::load(PathBuf::from(path)) {
            Ok(store) => {
                *out = Box::into_raw(Box::new(CkStore(store)));
                CkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of distinct tweets in the store; 0 for a null handle.
///
/// # Safety
/// `store` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ck_store_len(store: *const CkStore) -> usize {
    store.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `store` must be null or a live handle, and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ck_store_free(store: *mut CkStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Builds the collection of `hashtag`, expanding by `window_days` days.
///
/// # Safety
/// `store` must be a live handle, `hashtag` a valid C string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_collection_build(
    store: *const CkStore,
    hashtag: *const c_char,
    window_days: u32,
    out: *mut *mut CkCollection,
) -> CkStatus {
    guard(|| {
        let store = handle!(store, "store");
        out_ptr!(out);
        let tag = try_ck!(str_arg(hashtag, "hashtag"));
        match build_collection(&store.0, tag, window_days) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(CkCollection(c)));
                CkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ck_collection_seed_count(c: *const CkCollection) -> usize {
    c.as_ref().map_or(0, |c| c.0.seed_tweets.len())
}

/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ck_collection_expanded_count(c: *const CkCollection) -> usize {
    c.as_ref().map_or(0, |c| c.0.expanded_tweets.len())
}

/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ck_collection_user_count(c: *const CkCollection) -> usize {
    c.as_ref().map_or(0, |c| c.0.users.len())
}

/// # Safety
/// `c` must be null or a live handle, and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ck_collection_free(c: *mut CkCollection) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Fills `out` with statistics of the collection's seed tweets.
///
/// # Safety
/// `c` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_collection_inspect(
    c: *const CkCollection,
    out: *mut CkInspection,
) -> CkStatus {
    guard(|| {
        let c = handle!(c, "collection");
        out_ptr!(out);
        match inspection_stats(&c.0.seed_tweets) {
            Ok(s) => {
                *out = CkInspection {
                    tweet_count: s.tweet_count,
                    distinct_word_pct: s.distinct_word_pct,
                    tweets_per_user_mean: s.tweets_per_user_mean,
                    retweet_pct: s.retweet_pct,
                    hashtags_per_tweet_var: s.hashtags_per_tweet_var,
                    hashtags_per_tweet_std: s.hashtags_per_tweet_std,
                };
                CkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Extracts the collection's feature row with the built-in schema, slices
/// of `interval_mins` minutes, and the store's latest timestamp as today.
///
/// # Safety
/// `store` and `c` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_row_extract(
    store: *const CkStore,
    c: *const CkCollection,
    interval_mins: u32,
    out: *mut *mut CkRow,
) -> CkStatus {
    guard(|| {
        let store = handle!(store, "store");
        let c = handle!(c, "collection");
        out_ptr!(out);
        if interval_mins == 0 {
            return fail(CkStatus::InvalidArgument, "interval must be positive");
        }
        let Some(today) = store.0.max_timestamp().map(|t| t.date_naive()) else {
            return fail(CkStatus::EmptyCorpus, "store is empty");
        };
        let schema = FeatureSchema::default();
        let scorer = LexiconScorer::default();
        let params = ExtractParams {
            today,
            interval: Duration::minutes(interval_mins.into()),
            schema: &schema,
            scorer: &scorer,
        };
        match extract_row(&c.0, &params) {
            Ok(row) => {
                let columns = row
                    .columns
                    .iter()
                    .map(|n| CString::new(n.as_str()).expect("column names have no nul"))
                    .collect();
                *out = Box::into_raw(Box::new(CkRow { row, columns }));
                CkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `row` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ck_row_width(row: *const CkRow) -> usize {
    row.as_ref().map_or(0, |r| r.row.width())
}

/// Copies the row's values into `buf`, which must hold `ck_row_width` values.
///
/// # Safety
/// `row` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ck_row_values(row: *const CkRow, buf: *mut f64, len: usize) -> CkStatus {
    guard(|| {
        let row = handle!(row, "row");
        out_ptr!(buf);
        let values = &row.row.values;
        if len < values.len() {
            return fail(
                CkStatus::OutOfRange,
                format!("buffer holds {len} values, row has {}", values.len()),
            );
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        CkStatus::Ok
    })
}

/// Name of column `idx`, borrowed from the row; null when out of range.
///
/// # Safety
/// `row` must be null or a live handle. The pointer dies with the row.
#[no_mangle]
pub unsafe extern "C" fn ck_row_column_name(row: *const CkRow, idx: usize) -> *const c_char {
    match row.as_ref().and_then(|r| r.columns.get(idx)) {
        Some(name) => name.as_ptr(),
        None => ptr::null(),
    }
}

/// Hash of the schema the row was built with; free with `ck_string_free`.
///
/// # Safety
/// `row` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ck_row_schema_hash(row: *const CkRow) -> *mut c_char {
    match row.as_ref() {
        Some(r) => CString::new(r.row.meta.schema_hash.as_str())
            .expect("hex has no nul")
            .into_raw(),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `row` must be null or a live handle, and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ck_row_free(row: *mut CkRow) {
    if !row.is_null() {
        drop(Box::from_raw(row));
    }
}

/// Loads a model container written by `collusion-kit train`.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_model_load(path: *const c_char, out: *mut *mut CkModel) -> CkStatus {
    guard(|| {
        out_ptr!(out);
        let path = try_ck!(str_arg(path, "path"));
        match TrainedModel::load(&PathBuf::from(path)) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(CkModel(m)));
                CkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of classes the model scores; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ck_model_class_count(model: *const CkModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.meta.task.n_classes())
}

/// Scores the feature row `row` of the model's source width. Rows built under
/// a different schema are refused with `SchemaMismatch`. Writes the predicted
/// class and, when `scores` is not null, `ck_model_class_count` scores.
///
/// # Safety
/// `model` and `row` must be live handles, `class_out` a valid pointer, and
/// `scores` null or valid for `scores_len` writes.
#[no_mangle]
pub unsafe extern "C" fn ck_model_predict(
    model: *const CkModel,
    row: *const CkRow,
    class_out: *mut usize,
    scores: *mut f64,
    scores_len: usize,
) -> CkStatus {
    guard(|| {
        let model = handle!(model, "model");
        let row = handle!(row, "row");
        out_ptr!(class_out);
        let p = match model
            .0
            .predict_feature_row(&row.row.meta.schema_hash, &row.row.values)
        {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        if !scores.is_null() {
            if scores_len < p.scores.len() {
                return fail(
                    CkStatus::OutOfRange,
                    format!(
                        "score buffer holds {scores_len}, model has {}",
                        p.scores.len()
                    ),
                );
            }
            ptr::copy_nonoverlapping(p.scores.as_ptr(), scores, p.scores.len());
        }
        *class_out = p.class;
        CkStatus::Ok
    })
}

/// # Safety
/// `model` must be null or a live handle, and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ck_model_free(model: *mut CkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
