//! Command-line front end: ingest, collect, extract, train, evaluate, rank.

mod config;
mod histogram;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{Duration, NaiveDate};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{PipelineConfig, RunRecord, SynthConfig};
pub use histogram::{histograms, Histogram};

use crate::corpus::{build_collection, inspection_stats, normalize_hashtag, user_overlap};
use crate::corpus::{partition_intervals, Collection, InspectionStats, LabelSet, TweetStore};
use crate::error::{Error, Result};
use crate::learn::{
    evaluate_cv, rank_features, render_table, roc_auc, train, ConfusionMatrix, Dataset, Metrics,
    ModelKind, ModelReport, Task, TrainedModel, Trainset, Variant,
};
use crate::pipeline::{extract_rows, read_labels, write_labels, ExtractParams};
use crate::sentiment::LexiconScorer;
use crate::summarization::{read_rows_csv, write_rows_csv, FeatureRow, FeatureSchema};
use crate::synth::{generate_batch, BatchSpec};

pub const THREADS_ENV: &str = "COLLUSION_KIT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "collusion-kit",
    version,
    about = "Detect organized posting behavior in hashtag collections"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command. Unset flags fall back to the config file,
/// then to the defaults shown.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalOpts {
    /// TOML config file, or a run_config.json from an earlier run
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Corpus JSONL file or directory (repeatable)
    #[arg(long, global = true)]
    pub corpus: Vec<PathBuf>,
    /// Traced hashtag (repeatable) [default: every hashtag in --labels]
    #[arg(long, global = true)]
    pub hashtag: Vec<String>,
    /// CSV with columns hashtag,organization,politicality,camp
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    /// Days around each seed post that expand a collection [default: 7]
    #[arg(long, global = true)]
    pub window_days: Option<u32>,
    /// Temporal slice length in minutes [default: 60]
    #[arg(long, global = true)]
    pub interval_mins: Option<u32>,
    /// Bucket schema JSON overriding the built-in one
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,
    /// Registration cutoff date [default: 2015-07-01]
    #[arg(long, global = true)]
    pub cutoff: Option<NaiveDate>,
    /// Reference date for account ages [default: latest corpus timestamp]
    #[arg(long, global = true)]
    pub today: Option<NaiveDate>,
    /// Seed for every random choice [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Classification task: organized, political, camp [default: organized]
    #[arg(long, global = true)]
    pub task: Option<Task>,
    /// Training set variant: all, pca, no-traced, pca-no-traced [default: all]
    #[arg(long, global = true)]
    pub variant: Option<Variant>,
    /// Classifier: rf, logreg, svm [default: rf]
    #[arg(long, global = true)]
    pub model: Option<ModelKind>,
    /// Cross-validation folds [default: 10]
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Share of variance the PCA variants keep [default: 0.95]
    #[arg(long, global = true)]
    pub variance_kept: Option<f64>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Print descriptive statistics of each traced hashtag's seed tweets
    Inspect,
    /// Build collections and report their sizes
    Collect,
    /// Extract one feature row per collection into features.csv
    Features {
        /// Also write per-feature histogram CSV and SVG files
        #[arg(long)]
        histograms: bool,
    },
    /// Build a training set from features.csv (or straight from the corpus)
    Trainset {
        /// Feature CSV to read instead of extracting from the corpus
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Fit a model on a training set and save it
    Train {
        /// Training set [default: <out>/trainset.json]
        #[arg(long)]
        trainset: Option<PathBuf>,
    },
    /// Cross-validate on a training set, or score it with a saved model
    Eval {
        /// Training set [default: <out>/trainset.json]
        #[arg(long)]
        trainset: Option<PathBuf>,
        /// Saved model to score the training set with instead of cross-validating
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Cross-validate every classifier that supports the task
        #[arg(long)]
        all_models: bool,
    },
    /// Rank features by wrapper subset search
    Rank {
        /// Training set [default: <out>/trainset.json]
        #[arg(long)]
        trainset: Option<PathBuf>,
        /// Number of features to report [default: 5]
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Report users shared between collections
    Overlap,
    /// Generate a labeled synthetic corpus
    Synth {
        /// Organized collections [default: 100]
        #[arg(long)]
        organized: Option<usize>,
        /// Organic collections [default: 100]
        #[arg(long)]
        organic: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Inspect => "inspect",
            Command::Collect => "collect",
            Command::Features { .. } => "features",
            Command::Trainset { .. } => "trainset",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Rank { .. } => "rank",
            Command::Overlap => "overlap",
            Command::Synth { .. } => "synth",
        }
    }
}

/// Applies the config file and flags on top of the defaults.
pub fn resolve_config(opts: &GlobalOpts, command: &Command) -> Result<PipelineConfig> {
    let mut c = match &opts.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if !opts.corpus.is_empty() {
        c.corpus = opts.corpus.clone();
    }
    if !opts.hashtag.is_empty() {
        c.hashtags = opts.hashtag.clone();
    }
    macro_rules! take {
        ($($field:ident),*) => { $( if let Some(v) = &opts.$field { c.$field = v.clone(); } )* };
    }
    take!(
        window_days,
        interval_mins,
        cutoff,
        seed,
        task,
        variant,
        model,
        folds,
        variance_kept,
        out
    );
    if opts.labels.is_some() {
        c.labels = opts.labels.clone();
    }
    if opts.schema.is_some() {
        c.schema = opts.schema.clone();
    }
    if opts.today.is_some() {
        c.today = opts.today;
    }
    match command {
        Command::Rank { top_k: Some(k), .. } => c.rank.top_k = *k,
        Command::Synth { organized, organic } => {
            if let Some(n) = organized {
                c.synth.organized = *n;
            }
            if let Some(n) = organic {
                c.synth.organic = *n;
            }
        }
        _ => {}
    }
    c.validate()?;
    Ok(c)
}

/// Sizes the global thread pool from `COLLUSION_KIT_THREADS` when set.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer"))
    })?;
    // A pool may already exist when called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parses arguments, runs the command, and maps errors to exit codes.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let structured = serde_json::json!({
                "error": e.kind(),
                "code": e.code(),
                "message": e.to_string(),
            });
            eprintln!("{structured}");
            ExitCode::from(e.code() as u8)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let config = resolve_config(&cli.opts, &cli.command)?;
    let record = RunRecord {
        command: cli.command.name().to_owned(),
        config,
    };
    log::info!(
        "resolved config: {}",
        serde_json::to_string(&record).expect("config serializes")
    );
    let out = record.config.out.clone();
    create_dir(&out)?;
    write_json(&out.join("run_config.json"), &record)?;
    let c = &record.config;
    match &cli.command {
        Command::Inspect => inspect(c),
        Command::Collect => collect(c),
        Command::Features { histograms } => features(c, *histograms),
        Command::Trainset { features } => trainset(c, features.as_deref()),
        Command::Train { trainset } => train_cmd(c, trainset.as_deref()),
        Command::Eval {
            trainset,
            model_file,
            all_models,
        } => eval(c, trainset.as_deref(), model_file.as_deref(), *all_models),
        Command::Rank { trainset, .. } => rank(c, trainset.as_deref()),
        Command::Overlap => overlap(c),
        Command::Synth { .. } => synth(c),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_store(c: &PipelineConfig) -> Result<TweetStore> {
    if c.corpus.is_empty() {
        return Err(Error::InvalidArgument("no --corpus given".into()));
    }
    let store = TweetStore::load_paths(&c.corpus)?;
    log::info!("loaded corpus: {:?}", store.report());
    Ok(store)
}

fn load_labels(c: &PipelineConfig) -> Result<BTreeMap<String, LabelSet>> {
    match &c.labels {
        Some(path) => read_labels(path),
        None => Ok(BTreeMap::new()),
    }
}

fn hashtags(c: &PipelineConfig, labels: &BTreeMap<String, LabelSet>) -> Result<Vec<String>> {
    let tags: Vec<String> = if c.hashtags.is_empty() {
        labels.keys().cloned().collect()
    } else {
        c.hashtags.iter().map(|t| normalize_hashtag(t)).collect()
    };
    if tags.is_empty() {
        return Err(Error::InvalidArgument(
            "no hashtags: pass --hashtag or a --labels file".into(),
        ));
    }
    Ok(tags)
}

fn collections(c: &PipelineConfig, store: &TweetStore) -> Result<Vec<Collection>> {
    let labels = load_labels(c)?;
    hashtags(c, &labels)?
        .iter()
        .map(|t| {
            let label = labels.get(t).copied().unwrap_or_default();
            Ok(build_collection(store, t, c.window_days)?.with_label(label))
        })
        .collect()
}

fn schema(c: &PipelineConfig) -> Result<FeatureSchema> {
    match &c.schema {
        Some(path) => FeatureSchema::load(path),
        None => Ok(FeatureSchema::with_cutoff(c.cutoff)),
    }
}

fn today(c: &PipelineConfig, store: &TweetStore) -> NaiveDate {
    c.today
        .or_else(|| store.max_timestamp().map(|t| t.date_naive()))
        .expect("store is never empty")
}

#[derive(Serialize)]
struct InspectLine {
    hashtag: String,
    #[serde(flatten)]
    stats: InspectionStats,
}

pub fn render_inspection(rows: &[(String, InspectionStats)]) -> String {
    let mut s = format!(
        "{:<24} {:>8} {:>8} {:>6} {:>8} {:>8} {:>8}\n",
        "Hashtag", "Tweets", "DW%", "TPU", "RT%", "HT var", "HT std"
    );
    for (tag, st) in rows {
        let _ = writeln!(
            s,
            "{:<24} {:>8} {:>8.2} {:>6.2} {:>8.2} {:>8.2} {:>8.2}",
            tag,
            st.tweet_count,
            st.distinct_word_pct,
            st.tweets_per_user_mean,
            st.retweet_pct,
            st.hashtags_per_tweet_var,
            st.hashtags_per_tweet_std
        );
    }
    s
}

fn inspect(c: &PipelineConfig) -> Result<()> {
    let store = load_store(c)?;
    let labels = load_labels(c)?;
    let mut rows = Vec::new();
    for tag in hashtags(c, &labels)? {
        let seeds: Vec<_> = store.with_hashtag(&tag).collect();
        if seeds.is_empty() {
            return Err(Error::UnknownHashtag(tag));
        }
        rows.push((tag, inspection_stats(seeds)?));
    }
    print!("{}", render_inspection(&rows));
    let lines: Vec<InspectLine> = rows
        .into_iter()
        .map(|(hashtag, stats)| InspectLine { hashtag, stats })
        .collect();
    write_json(&c.out.join("inspect.json"), &lines)
}

#[derive(Serialize)]
struct CollectionSummary {
    hashtag: String,
    seed_tweets: usize,
    expanded_tweets: usize,
    users: usize,
    users_without_profile: usize,
    slices: usize,
}

fn collect(c: &PipelineConfig) -> Result<()> {
    let store = load_store(c)?;
    let interval = Duration::minutes(c.interval_mins.into());
    let mut out = Vec::new();
    for col in collections(c, &store)? {
        out.push(CollectionSummary {
            hashtag: col.traced_hashtag.clone(),
            seed_tweets: col.seed_tweets.len(),
            expanded_tweets: col.expanded_tweets.len(),
            users: col.users.len(),
            users_without_profile: col.users.values().filter(|p| p.is_none()).count(),
            slices: partition_intervals(&col, interval)?.len(),
        });
    }
    println!(
        "{:<24} {:>8} {:>8} {:>8} {:>8}",
        "Hashtag", "ST", "ET", "Users", "Slices"
    );
    for s in &out {
        println!(
            "{:<24} {:>8} {:>8} {:>8} {:>8}",
            s.hashtag, s.seed_tweets, s.expanded_tweets, s.users, s.slices
        );
    }
    write_json(&c.out.join("collections.json"), &out)
}

fn extract(c: &PipelineConfig, schema: &FeatureSchema) -> Result<Vec<FeatureRow>> {
    let store = load_store(c)?;
    let labels = load_labels(c)?;
    let tags = hashtags(c, &labels)?;
    let scorer = LexiconScorer::default();
    let params = ExtractParams {
        today: today(c, &store),
        interval: Duration::minutes(c.interval_mins.into()),
        schema,
        scorer: &scorer,
    };
    extract_rows(&store, &tags, &labels, c.window_days, &params)
}

fn features(c: &PipelineConfig, with_histograms: bool) -> Result<()> {
    let schema = schema(c)?;
    let rows = extract(c, &schema)?;
    let mut buf = Vec::new();
    write_rows_csv(&mut buf, &schema, &rows)?;
    let csv_path = c.out.join("features.csv");
    std::fs::write(&csv_path, buf).map_err(|e| Error::io(&csv_path, e))?;
    schema.document().write(&c.out.join("schema.json"))?;
    let meta: BTreeMap<&str, _> = rows
        .iter()
        .map(|r| (r.collection_id.as_str(), &r.meta))
        .collect();
    write_json(&c.out.join("features.meta.json"), &meta)?;
    if with_histograms {
        let dir = c.out.join("histograms");
        for h in histograms(&schema, &rows) {
            h.write(&dir)?;
        }
    }
    println!(
        "wrote {} rows x {} columns to {}",
        rows.len(),
        schema.column_names().len(),
        csv_path.display()
    );
    Ok(())
}

fn base_dataset(c: &PipelineConfig, features_csv: Option<&Path>) -> Result<(Dataset, String)> {
    let (schema, table) = match features_csv {
        Some(path) => {
            let schema_path = match &c.schema {
                Some(p) => p.clone(),
                None => path.with_file_name("schema.json"),
            };
            (FeatureSchema::load(&schema_path)?, read_rows_csv(path)?)
        }
        None => {
            let schema = schema(c)?;
            let rows = extract(c, &schema)?;
            let mut buf = Vec::new();
            write_rows_csv(&mut buf, &schema, &rows)?;
            let tmp = c.out.join("features.csv");
            std::fs::write(&tmp, buf).map_err(|e| Error::io(&tmp, e))?;
            schema.document().write(&c.out.join("schema.json"))?;
            let table = read_rows_csv(&tmp)?;
            (schema, table)
        }
    };
    let data = Dataset::from_table(&table, &schema, c.task)?;
    Ok((data, schema.hash()))
}

fn trainset(c: &PipelineConfig, features_csv: Option<&Path>) -> Result<()> {
    let (base, schema_hash) = base_dataset(c, features_csv)?;
    let ts = Trainset::build(&base, &schema_hash, c.variant, c.variance_kept)?;
    let path = c.out.join("trainset.json");
    ts.write(&path)?;
    println!(
        "trainset {} ({}, {}): {} rows x {} columns, class counts {:?}",
        &ts.hash[..12],
        ts.meta.task,
        ts.meta.variant,
        ts.data.len(),
        ts.data.width(),
        ts.data.class_counts()
    );
    Ok(())
}

fn trainset_path(c: &PipelineConfig, given: Option<&Path>) -> PathBuf {
    given.map_or_else(|| c.out.join("trainset.json"), Path::to_path_buf)
}

fn train_cmd(c: &PipelineConfig, given: Option<&Path>) -> Result<()> {
    let ts = Trainset::read(&trainset_path(c, given))?;
    let model = train(c.model, &ts.data, &c.params, c.seed)?;
    let trained = TrainedModel {
        trainset_hash: ts.hash.clone(),
        meta: ts.meta.clone(),
        seed: c.seed,
        params: c.params.clone(),
        model,
    };
    let path = c.out.join("model.ckm");
    trained.save(&path)?;
    println!(
        "trained {} on trainset {} -> {}",
        c.model.display_name(),
        &ts.hash[..12],
        path.display()
    );
    Ok(())
}

/// Metrics of a saved model applied to a training set.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub model: ModelKind,
    pub trainset_hash: String,
    pub n: usize,
    pub metrics: Metrics,
    pub confusion: ConfusionMatrix,
}

fn eval(
    c: &PipelineConfig,
    given: Option<&Path>,
    model_file: Option<&Path>,
    all_models: bool,
) -> Result<()> {
    let ts = Trainset::read(&trainset_path(c, given))?;
    if let Some(path) = model_file {
        let trained = TrainedModel::load(path)?;
        let k = ts.data.task.n_classes();
        let mut predicted = Vec::with_capacity(ts.data.len());
        let mut scores = Vec::with_capacity(ts.data.len());
        for row in &ts.data.rows {
            let p = trained.predict_trainset_row(&ts.hash, row)?;
            predicted.push(p.class);
            scores.push(p.scores[k - 1]);
        }
        let confusion = ConfusionMatrix::from_predictions(k, &ts.data.labels, &predicted);
        let auc = if ts.data.task.is_binary() {
            let positive: Vec<bool> = ts.data.labels.iter().map(|&y| y == 1).collect();
            roc_auc(&scores, &positive)
        } else {
            None
        };
        let report = ScoreReport {
            model: trained.model.kind(),
            trainset_hash: ts.hash.clone(),
            n: ts.data.len(),
            metrics: Metrics::from_confusion(&confusion, auc),
            confusion,
        };
        println!(
            "{}: accuracy {:.3}, F {:.3}",
            report.model.display_name(),
            report.metrics.accuracy,
            report.metrics.f_measure
        );
        return write_json(&c.out.join("score_report.json"), &report);
    }

    let kinds: Vec<ModelKind> = if all_models {
        ModelKind::ALL
            .iter()
            .copied()
            .filter(|k| *k != ModelKind::LinearSvm || ts.data.task.is_binary())
            .collect()
    } else {
        vec![c.model]
    };
    let folds = c.folds.min(ts.data.len());
    let reports = kinds
        .iter()
        .map(|&k| evaluate_cv(k, &ts.data, folds, c.seed, &c.params))
        .collect::<Result<Vec<ModelReport>>>()?;
    let table = render_table(&reports);
    print!("{table}");
    write_text(&c.out.join("report.txt"), &table)?;
    if let [single] = reports.as_slice() {
        write_json(&c.out.join("report.json"), single)
    } else {
        write_json(&c.out.join("report.json"), &reports)
    }
}

fn rank(c: &PipelineConfig, given: Option<&Path>) -> Result<()> {
    let ts = Trainset::read(&trainset_path(c, given))?;
    let ranking = rank_features(&ts.data, c.seed, &c.rank)?;
    println!("baseline merit {:.3}", ranking.baseline);
    for (i, f) in ranking.features.iter().enumerate() {
        println!("{:>2}. {:<50} {:.3}", i + 1, f.name, f.merit);
    }
    write_json(&c.out.join("ranking.json"), &ranking)
}

#[derive(Serialize)]
struct OverlapLine<'a> {
    a: &'a str,
    b: &'a str,
    #[serde(flatten)]
    report: crate::corpus::OverlapReport,
}

fn overlap(c: &PipelineConfig) -> Result<()> {
    let store = load_store(c)?;
    let cols = collections(c, &store)?;
    let mut lines = Vec::new();
    let mut table = format!(
        "{:<24} {:<24} {:>8} {:>8} {:>10}\n",
        "A", "B", "Mutual", "% of A", "After cut"
    );
    for a in &cols {
        for b in &cols {
            if a.traced_hashtag == b.traced_hashtag {
                continue;
            }
            let report = user_overlap(a, b, c.cutoff);
            let _ = writeln!(
                table,
                "{:<24} {:<24} {:>8} {:>8.2} {:>10}",
                a.traced_hashtag,
                b.traced_hashtag,
                report.count,
                report.pct_of_a,
                report.registered_after_cutoff
            );
            lines.push(OverlapLine {
                a: &a.traced_hashtag,
                b: &b.traced_hashtag,
                report,
            });
        }
    }
    print!("{table}");
    write_json(&c.out.join("overlap.json"), &lines)
}

fn synth(c: &PipelineConfig) -> Result<()> {
    let spec = BatchSpec {
        organized: c.synth.organized,
        organic: c.synth.organic,
        seed: c.seed,
        ..BatchSpec::default()
    };
    let batch = generate_batch(&spec)?;
    let dir = c.out.join("corpus");
    let mut labels = BTreeMap::new();
    for corpus in &batch {
        corpus.write_to(&dir, &corpus.traced_tag)?;
        labels.insert(corpus.traced_tag.clone(), corpus.label);
    }
    let mut buf = Vec::new();
    write_labels(&mut buf, &labels)?;
    let path = c.out.join("labels.csv");
    std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    println!(
        "wrote {} collections to {} and labels to {}",
        batch.len(),
        dir.display(),
        path.display()
    );
    Ok(())
}
