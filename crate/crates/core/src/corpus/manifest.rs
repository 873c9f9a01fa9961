//! Corpus manifests: one record per document, as CSV or as a JSON array.
//!
//! Fields: `id`, `author`, `title`, `genre`, `text_path`, `annotations_path`.
//! `genre` and `annotations_path` may be empty. Paths are resolved relative
//! to the manifest's directory.

use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::{load_annotations, Corpus, Document};
use crate::error::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    #[serde(default)]
    pub author: Option<String>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub genre: Option<String>,
    pub text_path: PathBuf,
    #[serde(default)]
    pub annotations_path: Option<PathBuf>,
}

fn read_records(path: &Path) -> Result<Vec<ManifestRecord>, CorpusError> {
    let malformed = |message: String| CorpusError::Manifest {
        path: path.to_path_buf(),
        message,
    };
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        return serde_json::from_slice(&bytes).map_err(|e| malformed(e.to_string()));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(&bytes[..]);
    reader
        .deserialize()
        .map(|r| r.map_err(|e| malformed(e.to_string())))
        .collect()
}

fn read_text(path: &Path) -> Result<String, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::MissingFile(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads, normalizes, tokenizes and sentence-splits every document of a
/// manifest, attaching annotation layers where declared.
pub fn load_corpus(manifest_path: &Path) -> Result<Corpus, CorpusError> {
    if !manifest_path.exists() {
        return Err(CorpusError::MissingFile(manifest_path.to_path_buf()));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let records = read_records(manifest_path)?;
    let mut documents = Vec::with_capacity(records.len());
    let mut seen = std::collections::HashSet::new();
    for record in records {
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId(record.id));
        }
        let author = record
            .author
            .filter(|a| !a.trim().is_empty())
            .ok_or_else(|| CorpusError::MissingAuthor(record.id.clone()))?;
        let raw = read_text(&base.join(&record.text_path))?;
        let genre = record.genre.filter(|g| !g.is_empty());
        let mut doc = Document::from_text(&record.id, author, record.title, genre, raw)?;
        if doc.tokens.is_empty() {
            return Err(CorpusError::EmptyText(record.id));
        }
        if let Some(ann) = record.annotations_path.filter(|p| !p.as_os_str().is_empty()) {
            doc.annotations = Some(load_annotations(&base.join(ann), &doc)?);
        }
        info!("{}: {} tokens, {} sentences", doc.id, doc.token_count(), doc.sentences.len());
        documents.push(doc);
    }
    Corpus::new(documents)
}
