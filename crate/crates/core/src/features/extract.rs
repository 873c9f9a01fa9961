//! Per-block feature extractors. Each returns raw occurrence counts.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{InstanceView, Token};
use crate::error::FeatureError;

pub type Counts = BTreeMap<String, u32>;

/// Separator between the elements of a tag n-gram.
pub const TAG_JOINER: char = '·';
/// Replacement character for masked letters.
pub const MASK_CHAR: char = '*';

/// Text of a token sequence with single spaces between tokens.
pub fn joined_text(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.surface);
    }
    out
}

/// Histogram of word-token lengths in characters.
pub fn token_lengths(tokens: &[Token]) -> BTreeMap<usize, u32> {
    let mut out = BTreeMap::new();
    for t in tokens.iter().filter(|t| t.is_word()) {
        *out.entry(t.char_length).or_insert(0) += 1;
    }
    out
}

pub fn function_words(tokens: &[Token], list: &BTreeSet<String>) -> Result<Counts, FeatureError> {
    if list.is_empty() {
        return Err(FeatureError::EmptyList("FunctionWords"));
    }
    let mut out = Counts::new();
    for t in tokens.iter().filter(|t| t.is_word()) {
        if list.contains(&t.surface) {
            *out.entry(t.surface.clone()).or_insert(0) += 1;
        }
    }
    Ok(out)
}

/// Histogram of sentence lengths, measured in characters of the sentence
/// written with single spaces between tokens.
pub fn sentence_lengths(view: &InstanceView<'_>) -> BTreeMap<usize, u32> {
    let mut out = BTreeMap::new();
    for s in view.sentences() {
        let tokens = &view.doc.tokens[s];
        let chars: usize = tokens.iter().map(|t| t.char_length).sum::<usize>() + tokens.len() - 1;
        *out.entry(chars).or_insert(0) += 1;
    }
    out
}

/// Character n-grams of `text` for every order in `orders`. Spaces count
/// as characters, so n-grams may span a word boundary.
pub fn char_ngrams(text: &str, orders: &BTreeSet<usize>) -> Counts {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Counts::new();
    for &n in orders {
        if n == 0 || n > chars.len() {
            continue;
        }
        for w in chars.windows(n) {
            *out.entry(w.iter().collect()).or_insert(0) += 1;
        }
    }
    out
}

/// Tag n-grams computed within each group (sentence); no n-gram spans two
/// groups.
pub fn tag_ngrams(groups: &[Vec<&str>], orders: &BTreeSet<usize>) -> Counts {
    let mut out = Counts::new();
    let joiner = TAG_JOINER.to_string();
    for group in groups {
        for &n in orders {
            if n == 0 || n > group.len() {
                continue;
            }
            for w in group.windows(n) {
                *out.entry(w.join(&joiner)).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Counts, for every word, the longest ending of `endings` it carries.
/// `endings` must be sorted by decreasing length.
pub fn verbal_endings(tokens: &[Token], endings: &[String]) -> Result<Counts, FeatureError> {
    if endings.is_empty() {
        return Err(FeatureError::EmptyList("VerbalEndings"));
    }
    let mut out = Counts::new();
    for t in tokens.iter().filter(|t| t.is_word()) {
        if let Some(e) = endings.iter().find(|e| t.surface.ends_with(e.as_str())) {
            *out.entry(e.clone()).or_insert(0) += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskVariant {
    /// Every character of a content word is masked.
    Dvma,
    /// Content words keep their first and last character.
    Dvex,
}

impl std::str::FromStr for MaskVariant {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "DVMA" => Ok(MaskVariant::Dvma),
            "DVEX" => Ok(MaskVariant::Dvex),
            other => Err(FeatureError::Config(format!("unknown masking variant `{other}`"))),
        }
    }
}

/// Text with every word outside `function_words` masked.
pub fn distort(tokens: &[Token], variant: MaskVariant, function_words: &BTreeSet<String>) -> String {
    let masked: Vec<Token> = tokens
        .iter()
        .map(|t| {
            if !t.is_word() || function_words.contains(&t.surface) {
                return t.clone();
            }
            let n = t.char_length;
            let surface: String = t
                .surface
                .chars()
                .enumerate()
                .map(|(i, c)| match variant {
                    MaskVariant::Dvex if i == 0 || i + 1 == n => c,
                    _ => MASK_CHAR,
                })
                .collect();
            Token::word(surface)
        })
        .collect();
    joined_text(&masked)
}

pub fn masked_ngrams(
    tokens: &[Token],
    variant: MaskVariant,
    function_words: &BTreeSet<String>,
    orders: &BTreeSet<usize>,
) -> Result<Counts, FeatureError> {
    if function_words.is_empty() {
        return Err(FeatureError::EmptyList("Masked"));
    }
    Ok(char_ngrams(&distort(tokens, variant, function_words), orders))
}
