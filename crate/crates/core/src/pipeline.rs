//! Shared plumbing between the evaluation protocol and the experiments:
//! cached per-instance features, training-set selection, and fitting of a
//! verifier or attributor on a chosen set of documents.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{segment, Corpus, Document, InstanceView, DEFAULT_SEGMENT_TOKENS};
use crate::dro::{self, DistributionalProfiles, DroConfig, LabeledVector};
use crate::error::{CorpusError, EvalError, FeatureError};
use crate::features::{BlockKind, FeatureConfig, FeatureExtractor, FeatureSpace, InstanceFeatures};
use crate::learner::{self, TrainConfig, TrainedModel, TuneOutcome};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationConfig {
    #[serde(default = "default_min_tokens")]
    pub min_tokens: usize,
    /// Train on whole texts as well as on their segments.
    #[serde(default = "default_true")]
    pub include_full_texts: bool,
}

fn default_min_tokens() -> usize {
    DEFAULT_SEGMENT_TOKENS
}
fn default_true() -> bool {
    true
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            min_tokens: DEFAULT_SEGMENT_TOKENS,
            include_full_texts: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    #[serde(default)]
    pub segmentation: SegmentationConfig,
    #[serde(default = "default_true")]
    pub use_dro: bool,
    #[serde(default)]
    pub dro: DroConfig,
    #[serde(default)]
    pub learner: TrainConfig,
    /// The candidate author of the verification task.
    pub positive_author: String,
}

impl PipelineConfig {
    pub fn new(features: FeatureConfig, positive_author: impl Into<String>) -> Self {
        PipelineConfig {
            features,
            segmentation: SegmentationConfig::default(),
            use_dro: true,
            dro: DroConfig::default(),
            learner: TrainConfig::default(),
            positive_author: positive_author.into(),
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        self.features.validate()?;
        if self.segmentation.min_tokens == 0 {
            return Err(FeatureError::from(CorpusError::ZeroSegmentLength).into());
        }
        self.dro.validate()?;
        self.learner.validate()?;
        Ok(())
    }

    pub fn blocks(&self) -> &BTreeSet<BlockKind> {
        &self.features.enabled_blocks
    }

    pub fn negative_class(&self) -> String {
        format!("not{}", self.positive_author)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedInstance {
    pub id: String,
    /// Index of the parent document in the corpus.
    pub doc: usize,
    pub segment: Option<usize>,
    pub features: InstanceFeatures,
}

/// A corpus with segments and per-block feature counts extracted once.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreparedCorpus {
    pub corpus: Corpus,
    pub instances: Vec<PreparedInstance>,
    pub extracted: BTreeSet<BlockKind>,
    pub min_tokens: usize,
}

impl PreparedCorpus {
    /// Segments every labelled document and extracts the extractor's blocks
    /// from every full text and segment. Disputed texts are not segmented.
    pub fn new(
        corpus: Corpus,
        extractor: &FeatureExtractor,
        min_tokens: usize,
    ) -> Result<Self, FeatureError> {
        let mut jobs: Vec<(usize, Option<crate::corpus::Segment>)> = Vec::new();
        for (d, doc) in corpus.documents.iter().enumerate() {
            jobs.push((d, None));
            if !doc.is_disputed() {
                jobs.extend(segment(doc, min_tokens)?.into_iter().map(|s| (d, Some(s))));
            }
        }
        let instances = jobs
            .par_iter()
            .map(|(d, seg)| {
                let doc = &corpus.documents[*d];
                let view = match seg {
                    Some(s) => InstanceView::of_segment(doc, s),
                    None => InstanceView::full(doc),
                };
                Ok(PreparedInstance {
                    id: view.id(),
                    doc: *d,
                    segment: seg.as_ref().map(|s| s.index),
                    features: extractor.extract(&view)?,
                })
            })
            .collect::<Result<Vec<_>, FeatureError>>()?;
        Ok(PreparedCorpus {
            extracted: extractor.config().enabled_blocks.clone(),
            corpus,
            instances,
            min_tokens,
        })
    }

    pub fn document(&self, instance: &PreparedInstance) -> &Document {
        &self.corpus.documents[instance.doc]
    }

    pub fn doc_index(&self, id: &str) -> Option<usize> {
        self.corpus.documents.iter().position(|d| d.id == id)
    }

    pub fn full_text(&self, doc: usize) -> &PreparedInstance {
        self.instances
            .iter()
            .find(|i| i.doc == doc && i.segment.is_none())
            .expect("every document has a full-text instance")
    }

    /// Training instances drawn from the labelled documents accepted by
    /// `keep`: their segments, plus the full texts if so configured.
    pub fn training<'a>(
        &'a self,
        segmentation: &SegmentationConfig,
        keep: impl Fn(usize, &Document) -> bool,
    ) -> Vec<&'a PreparedInstance> {
        self.instances
            .iter()
            .filter(|i| {
                let doc = &self.corpus.documents[i.doc];
                !doc.is_disputed()
                    && keep(i.doc, doc)
                    && (i.segment.is_some() || segmentation.include_full_texts)
            })
            .collect()
    }

    fn check_blocks(&self, blocks: &BTreeSet<BlockKind>) -> Result<(), FeatureError> {
        match blocks.iter().find(|b| !self.extracted.contains(b)) {
            Some(b) => Err(FeatureError::Config(format!("block {b} was not extracted"))),
            None => Ok(()),
        }
    }
}

/// A fitted binary verifier: feature space, optional DRO profiles, model.
#[derive(Debug, Clone)]
pub struct Verifier {
    pub space: FeatureSpace,
    pub profiles: Option<DistributionalProfiles>,
    pub dro: DroConfig,
    pub model: TrainedModel,
    pub tune: TuneOutcome,
    pub blocks: BTreeSet<BlockKind>,
    pub training_ids: Vec<String>,
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_synthetic: usize,
}

/// Fingerprint of a (possibly DRO-extended) space.
fn space_fingerprint(space: &FeatureSpace, latent: Option<usize>) -> String {
    crate::fingerprint([space.fingerprint(), format!("{latent:?}")])
}

pub fn fit_verifier(
    prepared: &PreparedCorpus,
    training: &[&PreparedInstance],
    config: &PipelineConfig,
    seed: u64,
) -> Result<Verifier, EvalError> {
    let blocks = config.blocks().clone();
    prepared.check_blocks(&blocks)?;
    let space = FeatureSpace::fit(training.iter().map(|i| &i.features), &blocks)?;
    let examples: Vec<LabeledVector> = training
        .iter()
        .map(|i| LabeledVector {
            id: i.id.clone(),
            vector: space.vectorize(&i.features),
            positive: prepared.document(i).author == config.positive_author,
            occurrences: i.features.occurrences(&blocks),
            group: i.doc,
        })
        .collect();
    let n_positive = examples.iter().filter(|e| e.positive).count();
    let n_negative = examples.len() - n_positive;
    if n_positive == 0 {
        return Err(EvalError::NoPositiveAuthor(config.positive_author.clone()));
    }

    // Inner tuning folds keep each document's instances together.
    let doc_of: std::collections::HashMap<&str, usize> =
        training.iter().map(|i| (i.id.as_str(), i.doc)).collect();
    let (x, y, groups, profiles, n_synthetic) = if config.use_dro {
        let natural: Vec<SparseVector> = examples.iter().map(|e| e.vector.clone()).collect();
        let profiles = DistributionalProfiles::fit(&natural, config.dro.latent_dimension)?;
        let extended = dro::oversample(&examples, &profiles, &config.dro, seed)?;
        let n_synth = extended.iter().filter(|e| e.synthetic).count();
        let y: Vec<bool> = extended.iter().map(|e| e.positive).collect();
        let groups: Vec<usize> = extended.iter().map(|e| doc_of[e.source_id.as_str()]).collect();
        let x: Vec<SparseVector> = extended.into_iter().map(|e| e.vector).collect();
        (x, y, groups, Some(profiles), n_synth)
    } else {
        let y = examples.iter().map(|e| e.positive).collect();
        let groups = training.iter().map(|i| i.doc).collect();
        let x = examples.into_iter().map(|e| e.vector).collect();
        (x, y, groups, None, 0)
    };

    let tune = learner::tune_c_binary(&x, &y, Some(&groups), &config.learner, seed)?;
    let mut model = learner::train_binary(&x, &y, &config.learner.with_c(tune.c))?;
    model.classes = vec![config.negative_class(), config.positive_author.clone()];
    model.fingerprint = space_fingerprint(&space, profiles.as_ref().map(|p| p.latent_dim()));
    Ok(Verifier {
        space,
        profiles,
        dro: config.dro.clone(),
        model,
        tune,
        blocks,
        training_ids: training.iter().map(|i| i.id.clone()).collect(),
        n_positive,
        n_negative,
        n_synthetic,
    })
}

impl Verifier {
    pub fn fingerprint(&self) -> &str {
        &self.model.fingerprint
    }

    /// Natural TFIDF vector of an instance in this verifier's space.
    pub fn natural_vector(&self, inst: &PreparedInstance) -> SparseVector {
        self.space.vectorize(&inst.features)
    }

    /// The model input for `inst`: the natural vector, extended with the
    /// `replica`-th latent draw when DRO is on.
    pub fn input_vector(
        &self,
        inst: &PreparedInstance,
        seed: u64,
        replica: u64,
    ) -> Result<SparseVector, EvalError> {
        let natural = self.natural_vector(inst);
        match &self.profiles {
            None => Ok(natural),
            Some(p) => {
                let samples = self.dro.samples_for(inst.features.occurrences(&self.blocks));
                Ok(p.extend_seeded(&natural, samples, seed, &format!("test/{}", inst.id), replica)?)
            }
        }
    }

    pub fn predict(
        &self,
        inst: &PreparedInstance,
        seed: u64,
        replica: u64,
    ) -> Result<learner::Prediction, EvalError> {
        let x = self.input_vector(inst, seed, replica)?;
        Ok(self.model.predict_checked(&inst.id, &x, self.fingerprint())?)
    }

    /// Column label, covering the latent block too.
    pub fn column_name(&self, column: usize) -> String {
        self.space
            .feature_name(column)
            .unwrap_or_else(|| format!("latent/{}", column - self.space.dim))
    }
}

/// A fitted multiclass attributor (no oversampling).
#[derive(Debug, Clone)]
pub struct Attributor {
    pub space: FeatureSpace,
    pub model: TrainedModel,
    pub tune: TuneOutcome,
    pub training_ids: Vec<String>,
}

pub fn fit_attributor(
    prepared: &PreparedCorpus,
    training: &[&PreparedInstance],
    config: &PipelineConfig,
    seed: u64,
) -> Result<Attributor, EvalError> {
    let blocks = config.blocks();
    prepared.check_blocks(blocks)?;
    let space = FeatureSpace::fit(training.iter().map(|i| &i.features), blocks)?;
    let x: Vec<SparseVector> = training.iter().map(|i| space.vectorize(&i.features)).collect();
    let y: Vec<String> = training.iter().map(|i| prepared.document(i).author.clone()).collect();
    let groups: Vec<usize> = training.iter().map(|i| i.doc).collect();
    let tune = learner::tune_c_multiclass(&x, &y, Some(&groups), &config.learner, seed)?;
    let mut model = learner::train_multiclass(&x, &y, &config.learner.with_c(tune.c))?;
    model.fingerprint = space_fingerprint(&space, None);
    Ok(Attributor {
        space,
        model,
        tune,
        training_ids: training.iter().map(|i| i.id.clone()).collect(),
    })
}

impl Attributor {
    pub fn predict(&self, inst: &PreparedInstance) -> Result<learner::Prediction, EvalError> {
        let x = self.space.vectorize(&inst.features);
        Ok(self.model.predict_checked(&inst.id, &x, &self.model.fingerprint)?)
    }
}
