use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading and preparing a corpus.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unbalanced quotation markup at byte offset {offset}")]
    UnbalancedQuote { offset: usize },
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("document `{0}` has an empty text")]
    EmptyText(String),
    #[error("document `{0}` does not declare an author")]
    MissingAuthor(String),
    #[error("annotation layer for `{document}` has {found} rows but the document has {expected} word tokens")]
    AnnotationLength {
        document: String,
        expected: usize,
        found: usize,
    },
    #[error("annotation layer for `{document}`, row {row}: {message}")]
    AnnotationRow {
        document: String,
        row: usize,
        message: String,
    },
    #[error("tag `{tag}` is not in tagset `{tagset}` (document `{document}`, row {row})")]
    UnknownTag {
        document: String,
        row: usize,
        tag: String,
        tagset: String,
    },
    #[error("segment length must be positive")]
    ZeroSegmentLength,
    #[error("empty resource list {}", .0.display())]
    EmptyList(PathBuf),
}

/// Errors raised by feature extraction and the feature space.
#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("empty word list for block {0}")]
    EmptyList(&'static str),
    #[error("block {0} needs an annotation layer, but document `{1}` has none")]
    MissingAnnotations(&'static str, String),
    #[error("invalid feature configuration: {0}")]
    Config(String),
    #[error("cannot fit a feature space on an empty training set")]
    EmptyTrainingSet,
    #[error("malformed feature-space file: {0}")]
    Format(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Errors raised by the oversampler.
#[derive(Debug, Error)]
pub enum DroError {
    #[error("cannot fit distributional profiles on an empty matrix")]
    EmptyMatrix,
    #[error("latent dimension must be at least 1")]
    ZeroLatentDimension,
    #[error("cannot extend a nonzero vector with zero samples")]
    ZeroSamples,
    #[error("vector dimension {found} does not match the profiles' feature space ({expected})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector has a negative or non-finite weight at column {0}")]
    InvalidWeight(usize),
    #[error("no positive examples to oversample")]
    NoPositives,
    #[error("target positive ratio {0} is outside (0, 1)")]
    InvalidRatio(f64),
}

/// Errors raised while training or applying a classifier.
#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("training data is empty")]
    Empty,
    #[error("non-finite feature value in example {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: model expects {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature-space fingerprint mismatch: model {expected}, input {found}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("explanations are only defined for binary models")]
    NotBinary,
    #[error("malformed model file: {0}")]
    Format(String),
}

/// Errors raised by metrics and the leave-one-out driver.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("posterior {0} is outside [0, 1]")]
    InvalidPosterior(f64),
    #[error("contingency table is empty")]
    EmptyTable,
    #[error("no classes to average over")]
    NoClasses,
    #[error("the corpus has no labelled text by the positive author `{0}`")]
    NoPositiveAuthor(String),
    #[error("no fold could be evaluated")]
    NoFolds,
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Dro(#[from] DroError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

/// Errors raised by the experiment drivers.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("no document with id `{0}`")]
    UnknownDocument(String),
    #[error("document `{0}` is labelled and would be part of the training data")]
    DisputedIsLabelled(String),
    #[error("no disputed (UNKNOWN-author) text in the corpus")]
    NoDisputed,
    #[error("several disputed texts in the corpus; pick one of: {0}")]
    AmbiguousDisputed(String),
    #[error("at least 2 candidate authors are required, found {0}")]
    TooFewCandidates(usize),
    #[error("the disputed text has an all-zero vector")]
    ZeroVector,
    #[error("empty feature pool")]
    EmptyPool,
    #[error("the number of replicas must be positive")]
    ZeroReplicas,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Dro(#[from] DroError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

/// Errors raised while reading or validating a run configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}
