//! Text normalization, tokenization and sentence splitting.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::CorpusError;

/// Opening delimiter of an excerpt quoted from another text.
pub const QUOTE_OPEN: &str = "{q:";
/// Closing delimiter of a quoted excerpt.
pub const QUOTE_CLOSE: char = '}';

/// Tokens after which a sentence ends.
pub const SENTENCE_TERMINATORS: [&str; 3] = [".", "!", "?"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
    pub char_length: usize,
}

impl Token {
    pub fn new(surface: impl Into<String>, kind: TokenKind) -> Self {
        let surface = surface.into();
        let char_length = surface.chars().count();
        Token {
            surface,
            kind,
            char_length,
        }
    }

    pub fn word(surface: impl Into<String>) -> Self {
        Token::new(surface, TokenKind::Word)
    }

    pub fn punct(surface: impl Into<String>) -> Self {
        Token::new(surface, TokenKind::Punctuation)
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

/// Removes quoted excerpts, lowercases, and folds `v`→`u` and `j`→`i`.
///
/// Quoted excerpts are written `{q: ... }` and may nest. A `}` outside of a
/// quote, or a quote that is never closed, is an error.
pub fn normalize(raw_text: &str) -> Result<String, CorpusError> {
    let mut stripped = strip_quotes(raw_text)?;
    // Deleting a span can glue a stray `{` to a following `q:`.
    while stripped.contains(QUOTE_OPEN) || stripped.contains("{Q:") {
        stripped = strip_quotes(&stripped)?;
    }
    let mut out = String::with_capacity(stripped.len());
    for c in stripped.chars() {
        for lc in c.to_lowercase() {
            out.push(match lc {
                'v' => 'u',
                'j' => 'i',
                other => other,
            });
        }
    }
    Ok(out)
}

// `{Q:` is accepted too, since lowercasing would turn it into markup.
fn is_quote_open(s: &str) -> bool {
    s.starts_with(QUOTE_OPEN) || s.starts_with("{Q:")
}

fn strip_quotes(text: &str) -> Result<String, CorpusError> {
    let mut out = String::with_capacity(text.len());
    // Byte offsets of the currently open quotes.
    let mut open: Vec<usize> = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        if is_quote_open(rest) {
            open.push(pos);
            pos += QUOTE_OPEN.len();
            continue;
        }
        let c = rest.chars().next().expect("non-empty remainder");
        if open.is_empty() {
            if c == QUOTE_CLOSE {
                return Err(CorpusError::UnbalancedQuote { offset: pos });
            }
            out.push(c);
        } else if c == '{' {
            // A plain brace inside a quote nests like an opener.
            open.push(pos);
        } else if c == QUOTE_CLOSE {
            open.pop();
        }
        pos += c.len_utf8();
    }
    match open.first() {
        Some(&offset) => Err(CorpusError::UnbalancedQuote { offset }),
        None => Ok(out),
    }
}

/// Splits normalized text into word tokens (maximal runs of letters) and
/// single-character punctuation tokens. Whitespace is discarded; any other
/// character, digits included, becomes a punctuation token.
pub fn tokenize(normalized_text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in normalized_text.chars() {
        if c.is_alphabetic() {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(Token::word(std::mem::take(&mut word)));
        }
        if !c.is_whitespace() {
            tokens.push(Token::punct(c.to_string()));
        }
    }
    if !word.is_empty() {
        tokens.push(Token::word(word));
    }
    tokens
}

pub fn is_terminator(token: &Token) -> bool {
    token.kind == TokenKind::Punctuation && SENTENCE_TERMINATORS.contains(&token.surface.as_str())
}

/// Partitions a token stream into sentences ending at `.`, `!` or `?`.
/// Trailing tokens without a terminator form a final sentence.
pub fn split_sentences(tokens: &[Token]) -> Vec<Range<usize>> {
    let mut sentences = Vec::new();
    let mut start = 0;
    for (i, token) in tokens.iter().enumerate() {
        if is_terminator(token) {
            sentences.push(start..i + 1);
            start = i + 1;
        }
    }
    if start < tokens.len() {
        sentences.push(start..tokens.len());
    }
    sentences
}
