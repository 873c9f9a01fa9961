use serde::{Deserialize, Serialize};

use crate::error::ExperimentError;
use crate::features::FeatureSpace;
use crate::pipeline::{PipelineConfig, PreparedCorpus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityEntry {
    pub id: String,
    pub author: String,
    pub title: String,
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub toolkit_version: String,
    pub corpus_fingerprint: String,
    pub disputed_id: String,
    pub ranking: Vec<SimilarityEntry>,
}

/// Ranks labelled full texts by cosine similarity of their natural TFIDF
/// vectors to the disputed text. The space is fitted on the labelled full
/// texts; no latent features are involved.
pub fn rank_similar(
    prepared: &PreparedCorpus,
    disputed_id: &str,
    top_k: usize,
    config: &PipelineConfig,
) -> Result<SimilarityReport, ExperimentError> {
    let disputed = prepared
        .doc_index(disputed_id)
        .ok_or_else(|| ExperimentError::UnknownDocument(disputed_id.to_string()))?;
    let texts: Vec<_> = prepared
        .instances
        .iter()
        .filter(|i| i.segment.is_none() && i.doc != disputed && !prepared.document(i).is_disputed())
        .collect();
    let space = FeatureSpace::fit(texts.iter().map(|i| &i.features), config.blocks())?;
    let query = space.vectorize(&prepared.full_text(disputed).features);
    if query.is_zero() {
        return Err(ExperimentError::ZeroVector);
    }
    let mut ranking: Vec<SimilarityEntry> = texts
        .iter()
        .map(|i| {
            let doc = prepared.document(i);
            SimilarityEntry {
                id: doc.id.clone(),
                author: doc.author.clone(),
                title: doc.title.clone(),
                cosine: query.cosine(&space.vectorize(&i.features)),
            }
        })
        .collect();
    ranking.sort_by(|a, b| b.cosine.total_cmp(&a.cosine).then_with(|| a.id.cmp(&b.id)));
    ranking.truncate(top_k);
    Ok(SimilarityReport {
        toolkit_version: crate::VERSION.to_string(),
        corpus_fingerprint: prepared.corpus.fingerprint.clone(),
        disputed_id: disputed_id.to_string(),
        ranking,
    })
}

impl SimilarityReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "id", "author", "title", "cosine"]).unwrap();
        for (i, e) in self.ranking.iter().enumerate() {
            w.write_record([&(i + 1).to_string(), e.id.as_str(), &e.author, &e.title, &format!("{:.4}", e.cosine)])
                .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}
