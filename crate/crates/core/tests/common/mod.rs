//! Synthetic corpora with planted stylistic signatures.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use avkit::corpus::{Corpus, Document};
use avkit::features::{BlockKind, FeatureConfig, FeatureExtractor};
use avkit::pipeline::{PipelineConfig, PreparedCorpus};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHABET: &[u8] = b"abcdefghiklmnopqrstuxyz";

pub const FUNCTION_WORDS: &[&str] = &["et", "in", "ad", "non", "sed", "cum", "quod", "de"];

#[derive(Debug, Clone)]
pub struct Style {
    pub name: String,
    pub texts: usize,
    /// Weight per letter of [`ALPHABET`].
    pub letters: Vec<f64>,
    /// `(word length, weight)`.
    pub lengths: Vec<(usize, f64)>,
    /// Words per text; overrides [`SynthSpec::words`].
    pub words: Option<(usize, usize)>,
}

impl Style {
    /// Uniform letters except `boosted`, whose weight is `1 + strength`.
    pub fn new(name: &str, texts: usize, boosted: &str, strength: f64, lengths: &[usize]) -> Self {
        let letters = ALPHABET
            .iter()
            .map(|c| if boosted.as_bytes().contains(c) { 1.0 + strength } else { 1.0 })
            .collect();
        Style {
            name: name.to_string(),
            texts,
            letters,
            lengths: lengths.iter().map(|&l| (l, 1.0)).collect(),
            words: None,
        }
    }

    pub fn with_words(mut self, min: usize, max: usize) -> Self {
        self.words = Some((min, max));
        self
    }
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub styles: Vec<Style>,
    /// Words per text, drawn uniformly from this range.
    pub words: (usize, usize),
    /// Words per sentence.
    pub sentence: (usize, usize),
    /// Probability that a word is replaced by a uniformly drawn function word.
    pub function_word_rate: f64,
    /// Disputed texts written in the style of `styles[i]`.
    pub disputed: Vec<usize>,
    pub seed: u64,
}

fn word(rng: &mut ChaCha8Rng, letters: &WeightedIndex<f64>, lengths: &[(usize, f64)], len_dist: &WeightedIndex<f64>) -> String {
    let n = lengths[len_dist.sample(rng)].0;
    (0..n).map(|_| ALPHABET[letters.sample(rng)] as char).collect()
}

fn text(spec: &SynthSpec, style: &Style, rng: &mut ChaCha8Rng) -> String {
    let letters = WeightedIndex::new(&style.letters).unwrap();
    let len_dist = WeightedIndex::new(style.lengths.iter().map(|l| l.1)).unwrap();
    let (lo, hi) = style.words.unwrap_or(spec.words);
    let n_words = rng.gen_range(lo..=hi);
    let mut out = String::new();
    let mut left_in_sentence = rng.gen_range(spec.sentence.0..=spec.sentence.1);
    for i in 0..n_words {
        if i > 0 {
            out.push(' ');
        }
        if rng.gen_bool(spec.function_word_rate) {
            out.push_str(FUNCTION_WORDS[rng.gen_range(0..FUNCTION_WORDS.len())]);
        } else {
            out.push_str(&word(rng, &letters, &style.lengths, &len_dist));
        }
        left_in_sentence -= 1;
        if left_in_sentence == 0 || i + 1 == n_words {
            out.push('.');
            left_in_sentence = rng.gen_range(spec.sentence.0..=spec.sentence.1);
        }
    }
    out
}

/// `(id, author, text)` triples; ids are `{author}{k:02}`, disputed texts
/// are `X{k:02}` with author `UNKNOWN`.
pub fn generate(spec: &SynthSpec) -> Vec<(String, String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut docs = Vec::new();
    for style in &spec.styles {
        for k in 0..style.texts {
            docs.push((format!("{}{k:02}", style.name), style.name.clone(), text(spec, style, &mut rng)));
        }
    }
    for (k, &s) in spec.disputed.iter().enumerate() {
        docs.push((format!("X{k:02}"), "UNKNOWN".to_string(), text(spec, &spec.styles[s], &mut rng)));
    }
    docs
}

pub fn corpus(spec: &SynthSpec) -> Corpus {
    let docs = generate(spec)
        .into_iter()
        .map(|(id, author, raw)| Document::from_text(&id, author, &id, None, raw).unwrap())
        .collect();
    Corpus::new(docs).unwrap()
}

/// Writes the texts and a CSV manifest under `dir`; returns the manifest path.
pub fn write_corpus(spec: &SynthSpec, dir: &Path) -> PathBuf {
    std::fs::create_dir_all(dir.join("texts")).unwrap();
    let mut manifest = String::from("id,author,title,genre,text_path\n");
    for (id, author, raw) in generate(spec) {
        let rel = format!("texts/{id}.txt");
        std::fs::write(dir.join(&rel), raw).unwrap();
        writeln!(manifest, "{id},{author},{id},,{rel}").unwrap();
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).unwrap();
    std::fs::write(dir.join("function_words.txt"), FUNCTION_WORDS.join("\n")).unwrap();
    path
}

pub fn feature_config(blocks: &[BlockKind]) -> FeatureConfig {
    let mut cfg = FeatureConfig::new(blocks.iter().copied());
    cfg.char_orders = BTreeSet::from([1, 2, 3]);
    cfg.function_word_list = Some(PathBuf::from("function_words.txt"));
    cfg
}

pub fn extractor(blocks: &[BlockKind]) -> FeatureExtractor {
    FeatureExtractor::with_lists(
        feature_config(blocks),
        FUNCTION_WORDS.iter().map(|s| s.to_string()),
        std::iter::empty(),
    )
    .unwrap()
}

pub fn prepare(spec: &SynthSpec, blocks: &[BlockKind], min_tokens: usize) -> PreparedCorpus {
    PreparedCorpus::new(corpus(spec), &extractor(blocks), min_tokens).unwrap()
}

pub fn pipeline(blocks: &[BlockKind], positive: &str, min_tokens: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(feature_config(blocks), positive);
    cfg.segmentation.min_tokens = min_tokens;
    cfg
}

/// A small corpus of `n` texts: author A (`n / 3` texts) against B.
pub fn small_spec(n: usize, seed: u64) -> SynthSpec {
    SynthSpec {
        styles: vec![
            Style::new("A", n / 3, "aeiou", 1.0, &[3, 4, 5]),
            Style::new("B", n - n / 3, "rstln", 1.0, &[4, 5, 6, 7]),
        ],
        words: (120, 200),
        sentence: (8, 14),
        function_word_rate: 0.1,
        disputed: vec![],
        seed,
    }
}
