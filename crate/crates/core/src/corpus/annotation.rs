//! Part-of-speech and dependency layers read from tab-separated sidecars.
//!
//! A sidecar starts with a header line declaring the tagset, followed by
//! one `surface<TAB>pos<TAB>dep` row per word token of the document:
//!
//! ```text
//! # tagset: UD
//! arma	NOUN	obj
//! uirumque	NOUN	conj
//! ```
//!
//! `UD` selects the Universal Dependencies UPOS tags and relations (relation
//! subtypes such as `nsubj:pass` are accepted). A closed custom tagset is
//! declared inline: `# tagset: mine; pos=N,V; dep=subj,root`.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::text::normalize;
use super::Document;
use crate::error::CorpusError;

const UD_UPOS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

const UD_DEPRELS: [&str; 37] = [
    "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp", "clf", "compound",
    "conj", "cop", "csubj", "dep", "det", "discourse", "dislocated", "expl", "fixed", "flat",
    "goeswith", "iobj", "list", "mark", "nmod", "nsubj", "nummod", "obj", "obl", "orphan",
    "parataxis", "punct", "reparandum", "root", "vocative", "xcomp",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tagset {
    pub name: String,
    pub pos: BTreeSet<String>,
    pub dep: BTreeSet<String>,
}

impl Tagset {
    pub fn universal_dependencies() -> Self {
        Tagset {
            name: "UD".to_string(),
            pos: UD_UPOS.iter().map(|s| s.to_string()).collect(),
            dep: UD_DEPRELS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Parses the payload of a `# tagset:` header.
    pub fn parse_header(line: &str) -> Option<Self> {
        let body = line.trim().strip_prefix('#')?.trim();
        let body = body.strip_prefix("tagset:")?.trim();
        let mut parts = body.split(';').map(str::trim);
        let name = parts.next().filter(|n| !n.is_empty())?.to_string();
        let mut pos = BTreeSet::new();
        let mut dep = BTreeSet::new();
        let mut custom = false;
        for part in parts {
            let (key, values) = part.split_once('=')?;
            let set: BTreeSet<String> = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
                .collect();
            match key.trim() {
                "pos" => pos = set,
                "dep" => dep = set,
                _ => return None,
            }
            custom = true;
        }
        if !custom {
            return (name == "UD").then(Tagset::universal_dependencies);
        }
        Some(Tagset { name, pos, dep })
    }

    pub fn has_pos(&self, tag: &str) -> bool {
        self.pos.contains(tag)
    }

    pub fn has_dep(&self, rel: &str) -> bool {
        self.dep.contains(rel) || rel.split_once(':').is_some_and(|(base, _)| self.dep.contains(base))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationLayer {
    pub document_id: String,
    pub tagset: String,
    pub pos_tags: Vec<String>,
    pub dep_relations: Vec<String>,
}

impl AnnotationLayer {
    pub fn len(&self) -> usize {
        self.pos_tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos_tags.is_empty()
    }
}

pub fn load_annotations(path: &Path, doc: &Document) -> Result<AnnotationLayer, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_annotations(&text, doc)
}

pub fn parse_annotations(text: &str, doc: &Document) -> Result<AnnotationLayer, CorpusError> {
    let row_error = |row: usize, message: String| CorpusError::AnnotationRow {
        document: doc.id.clone(),
        row,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let tagset = match lines.next() {
        Some((_, header)) => Tagset::parse_header(header)
            .ok_or_else(|| row_error(0, format!("invalid tagset header `{header}`")))?,
        // An empty sidecar only fits an empty document.
        None => {
            return finish(doc, "none".into(), Vec::new(), Vec::new());
        }
    };

    let words: Vec<&str> = doc
        .tokens
        .iter()
        .filter(|t| t.is_word())
        .map(|t| t.surface.as_str())
        .collect();
    let mut pos_tags = Vec::new();
    let mut dep_relations = Vec::new();
    for (line_no, line) in lines {
        let row = line_no + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(row_error(row, format!("expected 3 columns, found {}", cols.len())));
        }
        let (surface, pos, dep) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
        let unknown = |tag: &str| CorpusError::UnknownTag {
            document: doc.id.clone(),
            row,
            tag: tag.to_string(),
            tagset: tagset.name.clone(),
        };
        if !tagset.has_pos(pos) {
            return Err(unknown(pos));
        }
        if !tagset.has_dep(dep) {
            return Err(unknown(dep));
        }
        let index = pos_tags.len();
        if let Some(expected) = words.get(index) {
            let surface = normalize(surface).map_err(|e| row_error(row, e.to_string()))?;
            if surface != *expected {
                return Err(row_error(
                    row,
                    format!("surface `{surface}` does not match word token `{expected}`"),
                ));
            }
        }
        pos_tags.push(pos.to_string());
        dep_relations.push(dep.to_string());
    }
    finish(doc, tagset.name, pos_tags, dep_relations)
}

fn finish(
    doc: &Document,
    tagset: String,
    pos_tags: Vec<String>,
    dep_relations: Vec<String>,
) -> Result<AnnotationLayer, CorpusError> {
    let expected = doc.word_count();
    if pos_tags.len() != expected {
        return Err(CorpusError::AnnotationLength {
            document: doc.id.clone(),
            expected,
            found: pos_tags.len(),
        });
    }
    Ok(AnnotationLayer {
        document_id: doc.id.clone(),
        tagset,
        pos_tags,
        dep_relations,
    })
}
