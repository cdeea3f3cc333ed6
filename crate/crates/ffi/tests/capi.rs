use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use clap::Parser;
use collusion_kit::cli::{run, Cli};
use collusion_kit::corpus::{build_collection, inspection_stats, TweetStore};
use collusion_kit_ffi::*;

fn kit(args: &[&str]) {
    let mut argv = vec!["collusion-kit"];
    argv.extend_from_slice(args);
    run(&Cli::parse_from(argv)).expect("command succeeds");
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ck_last_error()) }
        .to_string_lossy()
        .into_owned()
}

/// Synthesizes a small labeled corpus, trains a forest on it, and returns
/// the traced hashtags with their organization label.
fn fixture(dir: &Path) -> Vec<(String, String)> {
    let out = dir.to_str().unwrap();
    kit(&[
        "--out",
        out,
        "--seed",
        "3",
        "synth",
        "--organized",
        "6",
        "--organic",
        "6",
    ]);
    let corpus = dir.join("corpus");
    let labels = dir.join("labels.csv");
    kit(&[
        "--out",
        out,
        "--corpus",
        corpus.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "trainset",
    ]);
    kit(&["--out", out, "train"]);
    let mut rdr = csv::Reader::from_path(labels).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_owned(), r[1].to_owned())
        })
        .collect()
}

fn load_store(path: &Path) -> *mut CkStore {
    let mut store = ptr::null_mut();
    let p = c(path.to_str().unwrap());
    assert_eq!(
        unsafe { ck_store_load(p.as_ptr(), &mut store) },
        CkStatus::Ok
    );
    assert!(!store.is_null());
    store
}

#[test]
fn end_to_end_scoring_through_handles() {
    let tmp = tempfile::tempdir().unwrap();
    let tags = fixture(tmp.path());
    let corpus = tmp.path().join("corpus");
    let store = load_store(&corpus);
    let reference = TweetStore::load(&corpus).unwrap();
    assert_eq!(unsafe { ck_store_len(store) }, reference.len());

    let mut model = ptr::null_mut();
    let mp = c(tmp.path().join("model.ckm").to_str().unwrap());
    assert_eq!(
        unsafe { ck_model_load(mp.as_ptr(), &mut model) },
        CkStatus::Ok
    );
    assert_eq!(unsafe { ck_model_class_count(model) }, 2);

    let mut correct = 0;
    for (tag, label) in &tags {
        let tp = c(tag);
        let mut coll = ptr::null_mut();
        let status = unsafe { ck_collection_build(store, tp.as_ptr(), 7, &mut coll) };
        assert_eq!(status, CkStatus::Ok, "{}", last_error());
        let lib = build_collection(&reference, tag, 7).unwrap();
        unsafe {
            assert_eq!(ck_collection_seed_count(coll), lib.seed_tweets.len());
            assert_eq!(
                ck_collection_expanded_count(coll),
                lib.expanded_tweets.len()
            );
            assert_eq!(ck_collection_user_count(coll), lib.users.len());
        }

        let mut stats = CkInspection::default();
        assert_eq!(
            unsafe { ck_collection_inspect(coll, &mut stats) },
            CkStatus::Ok
        );
        let expected = inspection_stats(&lib.seed_tweets).unwrap();
        assert_eq!(stats.tweet_count, expected.tweet_count);
        assert_eq!(stats.retweet_pct, expected.retweet_pct);
        assert_eq!(stats.distinct_word_pct, expected.distinct_word_pct);

        let mut row = ptr::null_mut();
        let status = unsafe { ck_row_extract(store, coll, 60, &mut row) };
        assert_eq!(status, CkStatus::Ok, "{}", last_error());
        let width = unsafe { ck_row_width(row) };
        assert!(width > 0);
        let mut values = vec![f64::NAN; width];
        assert_eq!(
            unsafe { ck_row_values(row, values.as_mut_ptr(), width) },
            CkStatus::Ok
        );
        assert!(values.iter().all(|v| v.is_finite()));
        let first = unsafe { CStr::from_ptr(ck_row_column_name(row, 0)) };
        assert!(!first.to_bytes().is_empty());
        assert!(unsafe { ck_row_column_name(row, width) }.is_null());
        let hash = unsafe { ck_row_schema_hash(row) };
        assert_eq!(unsafe { CStr::from_ptr(hash) }.to_bytes().len(), 64);
        unsafe { ck_string_free(hash) };

        let mut class = usize::MAX;
        let mut scores = [0.0; 2];
        let status = unsafe { ck_model_predict(model, row, &mut class, scores.as_mut_ptr(), 2) };
        assert_eq!(status, CkStatus::Ok, "{}", last_error());
        assert!(class < 2);
        assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let predicted = if class == 0 { "organic" } else { "organized" };
        correct += usize::from(predicted == label);

        unsafe {
            ck_row_free(row);
            ck_collection_free(coll);
        }
    }
    assert!(correct * 10 >= tags.len() * 9, "{correct}/{}", tags.len());
    unsafe {
        ck_model_free(model);
        ck_store_free(store);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut store = ptr::null_mut();
    let missing = c("/nonexistent/corpus.jsonl");
    assert_eq!(
        unsafe { ck_store_load(missing.as_ptr(), &mut store) },
        CkStatus::Io
    );
    assert!(store.is_null());
    assert!(last_error().contains("/nonexistent/corpus.jsonl"));

    assert_eq!(
        unsafe { ck_store_load(ptr::null(), &mut store) },
        CkStatus::NullPointer
    );
    let bad = [0xffu8 as c_char, 0];
    assert_eq!(
        unsafe { ck_store_load(bad.as_ptr(), &mut store) },
        CkStatus::InvalidUtf8
    );

    let mut model = ptr::null_mut();
    let tmp = tempfile::tempdir().unwrap();
    let junk = tmp.path().join("junk.ckm");
    std::fs::write(&junk, b"not a model").unwrap();
    let jp = c(junk.to_str().unwrap());
    assert_eq!(
        unsafe { ck_model_load(jp.as_ptr(), &mut model) },
        CkStatus::Container
    );

    let mut coll = ptr::null_mut();
    let tag = c("anything");
    assert_eq!(
        unsafe { ck_collection_build(ptr::null(), tag.as_ptr(), 7, &mut coll) },
        CkStatus::NullPointer
    );
    assert_eq!(last_error(), "store is null");
}

#[test]
fn status_codes_match_cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let tags = fixture(tmp.path());
    let store = load_store(&tmp.path().join("corpus"));

    let unknown = c("nosuchtag");
    let mut coll = ptr::null_mut();
    let status = unsafe { ck_collection_build(store, unknown.as_ptr(), 7, &mut coll) };
    let err = build_collection(
        &TweetStore::load(tmp.path().join("corpus")).unwrap(),
        "nosuchtag",
        7,
    )
    .unwrap_err();
    assert_eq!(status as i32, err.code());

    let tp = c(&tags[0].0);
    assert_eq!(
        unsafe { ck_collection_build(store, tp.as_ptr(), 7, &mut coll) },
        CkStatus::Ok
    );
    let mut row = ptr::null_mut();
    assert_eq!(
        unsafe { ck_row_extract(store, coll, 0, &mut row) },
        CkStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { ck_row_extract(store, coll, 60, &mut row) },
        CkStatus::Ok
    );
    let mut small = [0.0; 1];
    assert_eq!(
        unsafe { ck_row_values(row, small.as_mut_ptr(), 1) },
        CkStatus::OutOfRange
    );

    let out = tmp.path().to_str().unwrap();
    let corpus = tmp.path().join("corpus");
    let labels = tmp.path().join("labels.csv");
    kit(&[
        "--out",
        out,
        "--corpus",
        corpus.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--schema",
        write_other_schema(tmp.path()).to_str().unwrap(),
        "trainset",
    ]);
    kit(&["--out", out, "train"]);
    let mut model = ptr::null_mut();
    let mp = c(tmp.path().join("model.ckm").to_str().unwrap());
    assert_eq!(
        unsafe { ck_model_load(mp.as_ptr(), &mut model) },
        CkStatus::Ok
    );
    let mut class = 0;
    assert_eq!(
        unsafe { ck_model_predict(model, row, &mut class, ptr::null_mut(), 0) },
        CkStatus::SchemaMismatch
    );

    unsafe {
        ck_model_free(model);
        ck_row_free(row);
        ck_collection_free(coll);
        ck_store_free(store);
    }
}

/// A schema differing from the built-in one only in its cutoff date.
fn write_other_schema(dir: &Path) -> std::path::PathBuf {
    let mut schema = collusion_kit::summarization::FeatureSchema::default();
    schema.registration.cutoff = schema.registration.cutoff.pred_opt().unwrap();
    let path = dir.join("other_schema.json");
    std::fs::write(&path, serde_json::to_string(&schema).unwrap()).unwrap();
    path
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        assert_eq!(ck_store_len(ptr::null()), 0);
        assert_eq!(ck_row_width(ptr::null()), 0);
        assert!(ck_row_schema_hash(ptr::null()).is_null());
        ck_store_free(ptr::null_mut());
        ck_collection_free(ptr::null_mut());
        ck_row_free(ptr::null_mut());
        ck_model_free(ptr::null_mut());
        ck_string_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(ck_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/collusion_kit.h")).unwrap();
    let source = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    assert!(header.contains("CK_STATUS_SCHEMA_MISMATCH = 16"));
}
