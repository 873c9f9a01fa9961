//! Command-line front end: `avkit <command> --config run.toml`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{load_corpus, segment, Corpus};
use crate::error::{ConfigError, CorpusError, EvalError, ExperimentError, FeatureError};
use crate::eval::loo_run;
use crate::experiments::{
    ablate, attribute_disputed, attribution_contingency, rank_similar, resolve_disputed,
    verify_disputed, AblationMode,
};
use crate::features::FeatureExtractor;
use crate::pipeline::PreparedCorpus;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CORPUS: i32 = 3;
pub const EXIT_EXPERIMENT: i32 = 4;
pub const EXIT_IO: i32 = 1;

pub const CACHE_FILE: &str = "prepared_corpus.json";

#[derive(Debug, Parser)]
#[command(name = "avkit", version, about = "Stylometric authorship verification toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Size of the worker pool (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Validate the corpus and cache tokenization, segments and features.
    Ingest(CommonArgs),
    /// Leave-one-out verification of the positive author.
    Loo(CommonArgs),
    /// Greedy feature-block ablation.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        mode: Option<AblationMode>,
    },
    /// Verify the disputed text against the positive author.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        disputed: Option<String>,
    },
    /// Closed-set attribution of the disputed text.
    Attribute {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=2))]
        min_texts: Option<u64>,
        #[arg(long)]
        disputed: Option<String>,
        /// Also run the leave-one-out attribution over the candidates.
        #[arg(long)]
        contingency: bool,
    },
    /// Rank labelled texts by similarity to the disputed text.
    Similar {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        disputed: Option<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Loo(_) => "loo",
            Command::Ablate { .. } => "ablate",
            Command::Verify { .. } => "verify",
            Command::Attribute { .. } => "attribute",
            Command::Similar { .. } => "similar",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Ingest(c) | Command::Loo(c) => c,
            Command::Ablate { common, .. }
            | Command::Verify { common, .. }
            | Command::Attribute { common, .. }
            | Command::Similar { common, .. } => common,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("corpus error: {0}")]
    Corpus(String),
    #[error("experiment error: {0}")]
    Experiment(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Corpus(_) => EXIT_CORPUS,
            CliError::Experiment(_) => EXIT_EXPERIMENT,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Corpus(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        CliError::Experiment(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Experiment(e.to_string())
    }
}

/// Every report file wraps its payload with the run's provenance.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub toolkit_version: &'a str,
    pub command: &'a str,
    pub seed: u64,
    pub corpus_fingerprint: &'a str,
    pub config: &'a RunConfig,
    pub result: &'a T,
}

#[derive(Serialize, Deserialize)]
struct PreparedCache {
    key: String,
    prepared: PreparedCorpus,
}

/// Summary row of `ingest`.
#[derive(Debug, Clone, Serialize)]
pub struct DocumentSummary {
    pub id: String,
    pub author: String,
    pub title: String,
    pub tokens: usize,
    pub words: usize,
    pub sentences: usize,
    pub segments: usize,
}

/// Loads the config named by the arguments and applies the overrides.
pub fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    if common.threads == Some(0) {
        return Err(ConfigError::Invalid("--threads must be positive".into()).into());
    }
    Ok(cfg)
}

/// Runs one command; returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let common = cli.command.common();
    let mut cfg = load_config(common)?;
    match &cli.command {
        Command::Ablate { mode: Some(m), .. } => cfg.experiments.ablation_mode = *m,
        Command::Verify { replicas, disputed, .. } => {
            if let Some(r) = replicas {
                cfg.experiments.replicas = *r;
            }
            if disputed.is_some() {
                cfg.experiments.disputed_id = disputed.clone();
            }
        }
        Command::Attribute {
            min_texts,
            disputed,
            contingency,
            ..
        } => {
            if let Some(m) = min_texts {
                cfg.experiments.min_texts = *m as usize;
            }
            if disputed.is_some() {
                cfg.experiments.disputed_id = disputed.clone();
            }
            cfg.experiments.contingency |= *contingency;
        }
        Command::Similar { top_k, disputed, .. } => {
            if let Some(k) = top_k {
                cfg.experiments.top_k = *k;
            }
            if disputed.is_some() {
                cfg.experiments.disputed_id = disputed.clone();
            }
        }
        _ => {}
    }
    cfg.validate()?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(ConfigError::Invalid(e.to_string())))?;
    pool.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let extractor = FeatureExtractor::new(cfg.pipeline.features.clone())
        .map_err(|e| feature_error(e, true))?;
    let corpus = load_corpus(&cfg.manifest)?;
    info!("loaded {} documents from {}", corpus.documents.len(), cfg.manifest.display());
    let out = Output::new(&cfg.output_dir)?;

    if let Command::Ingest(_) = command {
        return ingest(corpus, &extractor, cfg, out);
    }
    let prepared = prepare(corpus, &extractor, cfg)?;
    let fingerprint = prepared.corpus.fingerprint.clone();
    let seed = cfg.seed;
    let envelope = |result: &dyn ErasedJson| -> String {
        let value = result.json();
        serde_json::to_string_pretty(&Envelope {
            toolkit_version: crate::VERSION,
            command: command.name(),
            seed,
            corpus_fingerprint: &fingerprint,
            config: cfg,
            result: &value,
        })
        .expect("report serializes")
    };
    let x = &cfg.experiments;
    let mut out = out;

    match command {
        Command::Ingest(_) => unreachable!(),
        Command::Loo(_) => {
            let report = loo_run(&prepared, &cfg.pipeline, seed)?;
            out.write("loo_report.json", &envelope(&report))?;
            out.write("loo_predictions.csv", &report.predictions_csv())?;
            out.write("hardest.csv", &hardest_csv(&report))?;
            out.write("loo_summary.txt", &report.summary())?;
            out.write("timings.csv", &timings_csv(&report.fold_seconds))?;
            println!("{}", report.summary());
        }
        Command::Ablate { .. } => {
            let pool = match &x.ablation_pool {
                Some(p) => p.iter().copied().collect(),
                None => cfg.pipeline.blocks().clone(),
            };
            let report = ablate(&prepared, &cfg.pipeline, &pool, x.ablation_mode, seed)?;
            out.write("ablation.json", &envelope(&report))?;
            out.write("ablation.csv", &report.to_csv())?;
            let names: Vec<&str> = report.final_pool.iter().map(|b| b.name()).collect();
            println!("final pool: {}", names.join(", "));
        }
        Command::Verify { .. } => {
            let id = resolve_disputed(&prepared.corpus, x.disputed_id.as_deref())?;
            let verdict = verify_disputed(&prepared, &id, &cfg.pipeline, x.replicas, seed)?;
            out.write("verdict.json", &envelope(&verdict))?;
            println!(
                "{}: {} (median posterior {:.4} over {} replicas)",
                verdict.disputed_id,
                verdict.predicted_class,
                verdict.median,
                verdict.replicas.len()
            );
        }
        Command::Attribute { .. } => {
            let id = resolve_disputed(&prepared.corpus, x.disputed_id.as_deref())?;
            let result = attribute_disputed(&prepared, &id, x.min_texts, &cfg.pipeline, seed)?;
            out.write("attribution.json", &envelope(&result))?;
            out.write("attribution.csv", &result.to_csv())?;
            for (a, p) in result.ranking.iter().take(5) {
                println!("{a}\t{p:.4}");
            }
            if x.contingency {
                let table = attribution_contingency(&prepared, x.min_texts, &cfg.pipeline, seed)?;
                out.write("contingency.json", &envelope(&table))?;
                out.write("contingency.csv", &table.to_csv())?;
                println!(
                    "leave-one-out attribution: {}/{} correct, macro-F1 {:.3}",
                    table.correct, table.total, table.macro_f1
                );
            }
        }
        Command::Similar { .. } => {
            let id = resolve_disputed(&prepared.corpus, x.disputed_id.as_deref())?;
            let report = rank_similar(&prepared, &id, x.top_k, &cfg.pipeline)?;
            out.write("similarity.json", &envelope(&report))?;
            out.write("similarity.csv", &report.to_csv())?;
            for e in &report.ranking {
                println!("{}\t{}\t{:.4}", e.id, e.author, e.cosine);
            }
        }
    }
    Ok(out.written)
}

/// Object-safe view of a serializable report.
trait ErasedJson {
    fn json(&self) -> serde_json::Value;
}

impl<T: Serialize> ErasedJson for T {
    fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn feature_error(e: FeatureError, config_stage: bool) -> CliError {
    match e {
        FeatureError::Config(_) | FeatureError::EmptyList(_) if config_stage => {
            CliError::Config(ConfigError::Invalid(e.to_string()))
        }
        other => CliError::Corpus(other.to_string()),
    }
}

fn cache_key(corpus: &Corpus, extractor: &FeatureExtractor, min_tokens: usize) -> String {
    crate::fingerprint([
        crate::VERSION.to_string(),
        corpus.fingerprint.clone(),
        extractor.fingerprint(),
        min_tokens.to_string(),
    ])
}

/// Reuses the `ingest` cache in the output directory when it matches the
/// corpus and feature settings; extracts features otherwise.
fn prepare(
    corpus: Corpus,
    extractor: &FeatureExtractor,
    cfg: &RunConfig,
) -> Result<PreparedCorpus, CliError> {
    let min_tokens = cfg.pipeline.segmentation.min_tokens;
    let key = cache_key(&corpus, extractor, min_tokens);
    let path = cfg.output_dir.join(CACHE_FILE);
    if let Ok(text) = fs::read_to_string(&path) {
        match serde_json::from_str::<PreparedCache>(&text) {
            Ok(cache) if cache.key == key => {
                info!("using cached features from {}", path.display());
                return Ok(cache.prepared);
            }
            _ => info!("ignoring stale cache {}", path.display()),
        }
    }
    PreparedCorpus::new(corpus, extractor, min_tokens).map_err(|e| feature_error(e, false))
}

fn ingest(
    corpus: Corpus,
    extractor: &FeatureExtractor,
    cfg: &RunConfig,
    mut out: Output,
) -> Result<Vec<PathBuf>, CliError> {
    let min_tokens = cfg.pipeline.segmentation.min_tokens;
    let mut rows = Vec::new();
    for doc in &corpus.documents {
        let segments = if doc.is_disputed() {
            0
        } else {
            segment(doc, min_tokens)?.len()
        };
        rows.push(DocumentSummary {
            id: doc.id.clone(),
            author: doc.author.clone(),
            title: doc.title.clone(),
            tokens: doc.token_count(),
            words: doc.word_count(),
            sentences: doc.sentences.len(),
            segments,
        });
    }
    let key = cache_key(&corpus, extractor, min_tokens);
    let prepared =
        PreparedCorpus::new(corpus, extractor, min_tokens).map_err(|e| feature_error(e, false))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).expect("in-memory csv");
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv");
    out.write("corpus_summary.csv", &csv)?;
    let cache = PreparedCache { key, prepared };
    out.write(CACHE_FILE, &serde_json::to_string(&cache).expect("cache serializes"))?;
    let labelled = cache.prepared.corpus.labelled().count();
    println!(
        "{} documents ({} labelled, {} disputed), {} instances; fingerprint {}",
        rows.len(),
        labelled,
        rows.len() - labelled,
        cache.prepared.instances.len(),
        cache.prepared.corpus.fingerprint
    );
    Ok(out.written)
}

fn hardest_csv(report: &crate::eval::LooReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "id", "author", "predicted_class", "confidence"])
        .expect("in-memory csv");
    for (i, r) in report.hardest(10).into_iter().enumerate() {
        w.write_record([
            &(i + 1).to_string(),
            r.id.as_str(),
            &r.author,
            &r.predicted_class,
            &format!("{:.6}", r.confidence),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn timings_csv(folds: &[(String, f64)]) -> String {
    let mut s = String::from("id,seconds\n");
    for (id, secs) in folds {
        s.push_str(&format!("{id},{secs:.3}\n"));
    }
    s
}

struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
    started: Instant,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Output {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            started: Instant::now(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        info!("wrote {} after {:.1}s", path.display(), self.started.elapsed().as_secs_f64());
        self.written.push(path);
        Ok(())
    }
}
