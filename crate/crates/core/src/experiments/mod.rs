//! The studies run on top of the pipeline: greedy feature ablation,
//! verification of a disputed text, closed-set attribution, and ranking of
//! the most similar known texts.

mod ablation;
mod attribution;
mod similarity;
mod verify;

pub use ablation::{ablate, AblationIteration, AblationMode, AblationReport, CandidateScore, PoolScore};
pub use attribution::{
    attribute_disputed, attribution_contingency, candidate_authors, AttributionContingency,
    AttributionResult, AttributionRow,
};
pub use similarity::{rank_similar, SimilarityEntry, SimilarityReport};
pub use verify::{median, verify_disputed, Verdict};

use crate::corpus::Corpus;
use crate::error::ExperimentError;

/// Returns `requested` after checking that it names a disputed document, or
/// the corpus' only disputed document when nothing is requested.
pub fn resolve_disputed(corpus: &Corpus, requested: Option<&str>) -> Result<String, ExperimentError> {
    match requested {
        Some(id) => {
            let doc = corpus
                .get(id)
                .ok_or_else(|| ExperimentError::UnknownDocument(id.to_string()))?;
            if !doc.is_disputed() {
                return Err(ExperimentError::DisputedIsLabelled(id.to_string()));
            }
            Ok(id.to_string())
        }
        None => {
            let ids: Vec<&str> = corpus.disputed().map(|d| d.id.as_str()).collect();
            match ids.as_slice() {
                [] => Err(ExperimentError::NoDisputed),
                [one] => Ok(one.to_string()),
                many => Err(ExperimentError::AmbiguousDisputed(many.join(", "))),
            }
        }
    }
}
