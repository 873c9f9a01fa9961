//! Stylometric feature blocks, the fitted feature space and TFIDF vectors.

pub mod extract;
mod space;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize, InstanceView};
use crate::error::{CorpusError, FeatureError};
pub use extract::{Counts, MaskVariant};
pub use space::{BlockSpace, FeatureSpace};

/// The feature families, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    TokenLengths,
    FunctionWords,
    SentenceLengths,
    PosNgrams,
    CharNgrams,
    DepNgrams,
    VerbalEndings,
    #[serde(rename = "MaskedDVMA")]
    MaskedDvma,
    #[serde(rename = "MaskedDVEX")]
    MaskedDvex,
}

impl BlockKind {
    pub const ALL: [BlockKind; 9] = [
        BlockKind::TokenLengths,
        BlockKind::FunctionWords,
        BlockKind::SentenceLengths,
        BlockKind::PosNgrams,
        BlockKind::CharNgrams,
        BlockKind::DepNgrams,
        BlockKind::VerbalEndings,
        BlockKind::MaskedDvma,
        BlockKind::MaskedDvex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::TokenLengths => "TokenLengths",
            BlockKind::FunctionWords => "FunctionWords",
            BlockKind::SentenceLengths => "SentenceLengths",
            BlockKind::PosNgrams => "PosNgrams",
            BlockKind::CharNgrams => "CharNgrams",
            BlockKind::DepNgrams => "DepNgrams",
            BlockKind::VerbalEndings => "VerbalEndings",
            BlockKind::MaskedDvma => "MaskedDVMA",
            BlockKind::MaskedDvex => "MaskedDVEX",
        }
    }

    pub fn is_ngram(self) -> bool {
        matches!(
            self,
            BlockKind::PosNgrams
                | BlockKind::CharNgrams
                | BlockKind::DepNgrams
                | BlockKind::MaskedDvma
                | BlockKind::MaskedDvex
        )
    }

    pub fn needs_annotations(self) -> bool {
        matches!(self, BlockKind::PosNgrams | BlockKind::DepNgrams)
    }

    pub fn needs_function_words(self) -> bool {
        matches!(
            self,
            BlockKind::FunctionWords | BlockKind::MaskedDvma | BlockKind::MaskedDvex
        )
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BlockKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BlockKind::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| FeatureError::Config(format!("unknown feature block `{s}`")))
    }
}

/// Highest n-gram order accepted by the configuration.
pub const MAX_NGRAM_ORDER: usize = 3;

fn default_orders() -> BTreeSet<usize> {
    BTreeSet::from([1, 2, 3])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub enabled_blocks: BTreeSet<BlockKind>,
    #[serde(default = "default_orders")]
    pub char_orders: BTreeSet<usize>,
    #[serde(default = "default_orders")]
    pub pos_orders: BTreeSet<usize>,
    #[serde(default = "default_orders")]
    pub dep_orders: BTreeSet<usize>,
    #[serde(default = "default_orders")]
    pub masked_orders: BTreeSet<usize>,
    #[serde(default)]
    pub function_word_list: Option<PathBuf>,
    #[serde(default)]
    pub verbal_ending_list: Option<PathBuf>,
}

impl FeatureConfig {
    pub fn new(blocks: impl IntoIterator<Item = BlockKind>) -> Self {
        FeatureConfig {
            enabled_blocks: blocks.into_iter().collect(),
            char_orders: default_orders(),
            pos_orders: default_orders(),
            dep_orders: default_orders(),
            masked_orders: default_orders(),
            function_word_list: None,
            verbal_ending_list: None,
        }
    }

    pub fn orders(&self, block: BlockKind) -> &BTreeSet<usize> {
        match block {
            BlockKind::PosNgrams => &self.pos_orders,
            BlockKind::DepNgrams => &self.dep_orders,
            BlockKind::MaskedDvma | BlockKind::MaskedDvex => &self.masked_orders,
            _ => &self.char_orders,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.enabled_blocks.is_empty() {
            return Err(FeatureError::Config("no feature block enabled".into()));
        }
        for &block in &self.enabled_blocks {
            if block.is_ngram() {
                let orders = self.orders(block);
                if orders.is_empty() {
                    return Err(FeatureError::Config(format!("{block}: empty n-gram orders")));
                }
                if let Some(bad) = orders.iter().find(|&&n| n == 0 || n > MAX_NGRAM_ORDER) {
                    return Err(FeatureError::Config(format!(
                        "{block}: n-gram order {bad} outside 1..={MAX_NGRAM_ORDER}"
                    )));
                }
            }
            if block.needs_function_words() && self.function_word_list.is_none() {
                return Err(FeatureError::Config(format!("{block} needs a function-word list")));
            }
            if block == BlockKind::VerbalEndings && self.verbal_ending_list.is_none() {
                return Err(FeatureError::Config(format!("{block} needs a verbal-ending list")));
            }
        }
        Ok(())
    }

    /// Resolves relative list paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.function_word_list, &mut self.verbal_ending_list]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// Reads a one-entry-per-line resource list. Blank lines and `#` comments
/// are skipped; entries are normalized like document text.
pub fn load_word_list(path: &Path) -> Result<Vec<String>, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let entry = normalize(line)?;
        if !out.contains(&entry) {
            out.push(entry);
        }
    }
    if out.is_empty() {
        return Err(CorpusError::EmptyList(path.to_path_buf()));
    }
    Ok(out)
}

/// Raw per-block counts of one instance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InstanceFeatures {
    pub id: String,
    pub blocks: BTreeMap<BlockKind, Counts>,
}

impl InstanceFeatures {
    pub fn block(&self, kind: BlockKind) -> Option<&Counts> {
        self.blocks.get(&kind)
    }

    /// Total feature occurrences over `blocks`.
    pub fn occurrences(&self, blocks: &BTreeSet<BlockKind>) -> u64 {
        self.blocks
            .iter()
            .filter(|(k, _)| blocks.contains(k))
            .flat_map(|(_, c)| c.values())
            .map(|&v| u64::from(v))
            .sum()
    }
}

/// Extracts the enabled blocks of a [`FeatureConfig`] from instances.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    config: FeatureConfig,
    function_words: BTreeSet<String>,
    /// Sorted by decreasing length so the first match is the longest.
    verbal_endings: Vec<String>,
}

impl FeatureExtractor {
    pub fn new(config: FeatureConfig) -> Result<Self, FeatureError> {
        config.validate()?;
        let needs_fw = config.enabled_blocks.iter().any(|b| b.needs_function_words());
        let function_words = match (&config.function_word_list, needs_fw) {
            (Some(p), true) => load_word_list(p)?.into_iter().collect(),
            _ => BTreeSet::new(),
        };
        let verbal_endings = match &config.verbal_ending_list {
            Some(p) if config.enabled_blocks.contains(&BlockKind::VerbalEndings) => {
                let mut v = load_word_list(p)?;
                v.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
                v
            }
            _ => Vec::new(),
        };
        Ok(FeatureExtractor {
            config,
            function_words,
            verbal_endings,
        })
    }

    /// Builds an extractor with in-memory lists instead of list files.
    pub fn with_lists(
        mut config: FeatureConfig,
        function_words: impl IntoIterator<Item = String>,
        verbal_endings: impl IntoIterator<Item = String>,
    ) -> Result<Self, FeatureError> {
        let function_words: BTreeSet<String> = function_words.into_iter().collect();
        let mut verbal_endings: Vec<String> = verbal_endings.into_iter().collect();
        verbal_endings.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
        verbal_endings.dedup();
        // Placeholders so that validation only checks the orders.
        let placeholder = PathBuf::from("<memory>");
        config.function_word_list.get_or_insert(placeholder.clone());
        config.verbal_ending_list.get_or_insert(placeholder);
        config.validate()?;
        Ok(FeatureExtractor {
            config,
            function_words,
            verbal_endings,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn function_words(&self) -> &BTreeSet<String> {
        &self.function_words
    }

    /// Hash over the config and the loaded word lists.
    pub fn fingerprint(&self) -> String {
        let config = serde_json::to_string(&self.config).expect("config serializes");
        crate::fingerprint(
            std::iter::once(config)
                .chain(self.function_words.iter().cloned())
                .chain(std::iter::once("\u{0}".to_string()))
                .chain(self.verbal_endings.iter().cloned()),
        )
    }

    pub fn extract_block(
        &self,
        view: &InstanceView<'_>,
        block: BlockKind,
    ) -> Result<Counts, FeatureError> {
        let tokens = view.tokens();
        let numeric = |m: BTreeMap<usize, u32>| -> Counts {
            m.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
        };
        let orders = self.config.orders(block);
        Ok(match block {
            BlockKind::TokenLengths => numeric(extract::token_lengths(tokens)),
            BlockKind::FunctionWords => extract::function_words(tokens, &self.function_words)?,
            BlockKind::SentenceLengths => numeric(extract::sentence_lengths(view)),
            BlockKind::CharNgrams => extract::char_ngrams(&extract::joined_text(tokens), orders),
            BlockKind::PosNgrams | BlockKind::DepNgrams => {
                let groups = view
                    .tags_by_sentence(block == BlockKind::DepNgrams)
                    .ok_or_else(|| FeatureError::MissingAnnotations(block.name(), view.doc.id.clone()))?;
                extract::tag_ngrams(&groups, orders)
            }
            BlockKind::VerbalEndings => extract::verbal_endings(tokens, &self.verbal_endings)?,
            BlockKind::MaskedDvma => {
                extract::masked_ngrams(tokens, MaskVariant::Dvma, &self.function_words, orders)?
            }
            BlockKind::MaskedDvex => {
                extract::masked_ngrams(tokens, MaskVariant::Dvex, &self.function_words, orders)?
            }
        })
    }

    pub fn extract(&self, view: &InstanceView<'_>) -> Result<InstanceFeatures, FeatureError> {
        let mut blocks = BTreeMap::new();
        for &block in &self.config.enabled_blocks {
            blocks.insert(block, self.extract_block(view, block)?);
        }
        Ok(InstanceFeatures {
            id: view.id(),
            blocks,
        })
    }
}
