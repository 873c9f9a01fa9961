//! Documents, segmentation and corpus loading.

mod annotation;
mod manifest;
mod text;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use annotation::{load_annotations, parse_annotations, AnnotationLayer, Tagset};
pub use manifest::{load_corpus, ManifestRecord};
pub use text::{
    is_terminator, normalize, split_sentences, tokenize, Token, TokenKind, QUOTE_CLOSE, QUOTE_OPEN,
    SENTENCE_TERMINATORS,
};

use crate::error::CorpusError;

/// Author value reserved for the disputed text(s).
pub const UNKNOWN_AUTHOR: &str = "UNKNOWN";

/// Default lower bound on segment length, in tokens.
pub const DEFAULT_SEGMENT_TOKENS: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub author: String,
    pub title: String,
    pub genre: Option<String>,
    pub raw_text: String,
    pub normalized_text: String,
    pub tokens: Vec<Token>,
    pub sentences: Vec<Range<usize>>,
    pub annotations: Option<AnnotationLayer>,
}

impl Document {
    /// Normalizes, tokenizes and sentence-splits `raw_text`.
    pub fn from_text(
        id: impl Into<String>,
        author: impl Into<String>,
        title: impl Into<String>,
        genre: Option<String>,
        raw_text: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let raw_text = raw_text.into();
        let normalized_text = normalize(&raw_text)?;
        let tokens = tokenize(&normalized_text);
        let sentences = split_sentences(&tokens);
        Ok(Document {
            id: id.into(),
            author: author.into(),
            title: title.into(),
            genre,
            raw_text,
            normalized_text,
            tokens,
            sentences,
            annotations: None,
        })
    }

    pub fn is_disputed(&self) -> bool {
        self.author == UNKNOWN_AUTHOR
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn word_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_word()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub parent_id: String,
    pub index: usize,
    pub token_range: Range<usize>,
    pub token_count: usize,
}

impl Segment {
    pub fn id(&self) -> String {
        segment_id(&self.parent_id, self.index)
    }
}

pub fn segment_id(parent_id: &str, index: usize) -> String {
    format!("{parent_id}#{index}")
}

/// Greedily packs whole sentences into segments of at least `min_tokens`
/// tokens. The trailing remainder, however short, becomes the last segment.
pub fn segment(doc: &Document, min_tokens: usize) -> Result<Vec<Segment>, CorpusError> {
    if min_tokens == 0 {
        return Err(CorpusError::ZeroSegmentLength);
    }
    let mut segments = Vec::new();
    let mut open: Option<usize> = None;
    for sentence in &doc.sentences {
        let start = *open.get_or_insert(sentence.start);
        if sentence.end - start >= min_tokens {
            segments.push(make_segment(doc, segments.len(), start..sentence.end));
            open = None;
        }
    }
    if let (Some(start), Some(last)) = (open, doc.sentences.last()) {
        segments.push(make_segment(doc, segments.len(), start..last.end));
    }
    Ok(segments)
}

fn make_segment(doc: &Document, index: usize, token_range: Range<usize>) -> Segment {
    Segment {
        parent_id: doc.id.clone(),
        index,
        token_count: token_range.len(),
        token_range,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    /// Hash over ids, authors, raw texts and annotation layers.
    pub fingerprint: String,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut seen = std::collections::HashSet::new();
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
        }
        let mut parts: Vec<&[u8]> = Vec::new();
        for d in &documents {
            parts.extend([d.id.as_bytes(), d.author.as_bytes(), d.raw_text.as_bytes()]);
            if let Some(layer) = &d.annotations {
                parts.extend(layer.pos_tags.iter().map(|t| t.as_bytes()));
                parts.extend(layer.dep_relations.iter().map(|t| t.as_bytes()));
            }
        }
        let fingerprint = crate::fingerprint(parts);
        Ok(Corpus {
            documents,
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn labelled(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| !d.is_disputed())
    }

    pub fn disputed(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.is_disputed())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Builds a document of `sentences` sentences with the given token counts
    /// (each includes its final period).
    fn doc_with_sentences(lengths: &[usize]) -> Document {
        let mut text = String::new();
        for &len in lengths {
            for _ in 1..len {
                text.push_str("ab ");
            }
            text.push_str(". ");
        }
        Document::from_text("d", "A", "t", None, text).unwrap()
    }

    fn counts(segments: &[Segment]) -> Vec<usize> {
        segments.iter().map(|s| s.token_count).collect()
    }

    #[test]
    fn greedy_packing() {
        let doc = doc_with_sentences(&[200; 5]);
        assert_eq!(counts(&segment(&doc, 400).unwrap()), vec![400, 400, 200]);
    }

    #[test]
    fn long_sentence_is_never_split() {
        let doc = doc_with_sentences(&[450]);
        let segs = segment(&doc, 400).unwrap();
        assert_eq!(counts(&segs), vec![450]);
        assert_eq!(segs[0].id(), "d#0");
    }

    #[test]
    fn zero_length_is_rejected() {
        let doc = doc_with_sentences(&[3]);
        assert!(matches!(segment(&doc, 0), Err(CorpusError::ZeroSegmentLength)));
    }

    #[test]
    fn empty_document_has_no_segments() {
        let doc = Document::from_text("e", "A", "t", None, "").unwrap();
        assert!(segment(&doc, 400).unwrap().is_empty());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let a = Document::from_text("x", "A", "t", None, "a.").unwrap();
        assert!(matches!(
            Corpus::new(vec![a.clone(), a]),
            Err(CorpusError::DuplicateId(id)) if id == "x"
        ));
    }

    proptest! {
        #[test]
        fn segments_tile_the_document(lengths in proptest::collection::vec(1usize..60, 0..30), min in 1usize..120) {
            let doc = doc_with_sentences(&lengths);
            let segs = segment(&doc, min).unwrap();
            let total: usize = segs.iter().map(|s| s.token_count).sum();
            prop_assert_eq!(total, doc.token_count());
            let starts: Vec<usize> = doc.sentences.iter().map(|r| r.start).collect();
            let ends: Vec<usize> = doc.sentences.iter().map(|r| r.end).collect();
            let mut next = 0;
            for (i, s) in segs.iter().enumerate() {
                prop_assert_eq!(s.token_range.start, next);
                prop_assert_eq!(s.index, i);
                prop_assert!(starts.contains(&s.token_range.start));
                prop_assert!(ends.contains(&s.token_range.end));
                if i + 1 < segs.len() {
                    prop_assert!(s.token_count >= min);
                }
                next = s.token_range.end;
            }
        }
    }
}

/// A training or test unit: a whole document or one of its segments.
#[derive(Debug, Clone)]
pub struct InstanceView<'a> {
    pub doc: &'a Document,
    pub token_range: Range<usize>,
    pub segment: Option<usize>,
}

impl<'a> InstanceView<'a> {
    pub fn full(doc: &'a Document) -> Self {
        InstanceView {
            doc,
            token_range: 0..doc.tokens.len(),
            segment: None,
        }
    }

    pub fn of_segment(doc: &'a Document, seg: &Segment) -> Self {
        InstanceView {
            doc,
            token_range: seg.token_range.clone(),
            segment: Some(seg.index),
        }
    }

    pub fn id(&self) -> String {
        match self.segment {
            Some(i) => segment_id(&self.doc.id, i),
            None => self.doc.id.clone(),
        }
    }

    pub fn tokens(&self) -> &'a [Token] {
        &self.doc.tokens[self.token_range.clone()]
    }

    /// Sentences inside the instance, as absolute token ranges.
    pub fn sentences(&self) -> impl Iterator<Item = Range<usize>> + 'a {
        let range = self.token_range.clone();
        self.doc.sentences.iter().filter_map(move |s| {
            let start = s.start.max(range.start);
            let end = s.end.min(range.end);
            (start < end).then_some(start..end)
        })
    }

    /// Annotation tags grouped by sentence, one entry per word token.
    /// `None` if the document has no annotation layer.
    pub fn tags_by_sentence(&self, dependency: bool) -> Option<Vec<Vec<&'a str>>> {
        let layer = self.doc.annotations.as_ref()?;
        let tags = if dependency {
            &layer.dep_relations
        } else {
            &layer.pos_tags
        };
        // Word ordinal of every token position.
        let mut word_index = Vec::with_capacity(self.doc.tokens.len());
        let mut next = 0;
        for t in &self.doc.tokens {
            word_index.push(next);
            if t.is_word() {
                next += 1;
            }
        }
        let groups = self
            .sentences()
            .map(|s| {
                s.filter(|&i| self.doc.tokens[i].is_word())
                    .filter_map(|i| tags.get(word_index[i]).map(String::as_str))
                    .collect()
            })
            .collect();
        Some(groups)
    }
}
