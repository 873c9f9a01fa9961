use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::ExperimentError;
use crate::eval::{macro_f1, vanilla_accuracy, ContingencyTable};
use crate::pipeline::{fit_attributor, PipelineConfig, PreparedCorpus};
use crate::rng::derive_seed;

/// Labelled authors with at least `min_texts` texts, sorted.
pub fn candidate_authors(corpus: &Corpus, min_texts: usize) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in corpus.labelled() {
        *counts.entry(&d.author).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .filter(|&(_, n)| n >= min_texts)
        .map(|(a, _)| a.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub toolkit_version: String,
    pub seed: u64,
    pub corpus_fingerprint: String,
    pub disputed_id: String,
    pub min_texts_per_author: usize,
    pub candidates: Vec<String>,
    /// `(author, posterior)` by decreasing posterior.
    pub ranking: Vec<(String, f64)>,
    pub fitted_c: f64,
}

/// Trains a multiclass model on the candidates' texts and segments and
/// ranks the candidates by posterior on the disputed text.
pub fn attribute_disputed(
    prepared: &PreparedCorpus,
    disputed_id: &str,
    min_texts: usize,
    config: &PipelineConfig,
    seed: u64,
) -> Result<AttributionResult, ExperimentError> {
    let disputed = prepared
        .doc_index(disputed_id)
        .ok_or_else(|| ExperimentError::UnknownDocument(disputed_id.to_string()))?;
    if !prepared.corpus.documents[disputed].is_disputed() {
        return Err(ExperimentError::DisputedIsLabelled(disputed_id.to_string()));
    }
    let candidates = candidate_authors(&prepared.corpus, min_texts);
    if candidates.len() < 2 {
        return Err(ExperimentError::TooFewCandidates(candidates.len()));
    }
    let training = prepared.training(&config.segmentation, |_, d| candidates.contains(&d.author));
    let attributor = fit_attributor(prepared, &training, config, seed)?;
    let pred = attributor.predict(prepared.full_text(disputed))?;
    let mut ranking: Vec<(String, f64)> = attributor
        .model
        .classes
        .iter()
        .cloned()
        .zip(pred.posteriors)
        .collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(AttributionResult {
        toolkit_version: crate::VERSION.to_string(),
        seed,
        corpus_fingerprint: prepared.corpus.fingerprint.clone(),
        disputed_id: disputed_id.to_string(),
        min_texts_per_author: min_texts,
        candidates,
        ranking,
        fitted_c: attributor.tune.c,
    })
}

impl AttributionResult {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "author", "posterior"]).unwrap();
        for (i, (a, p)) in self.ranking.iter().enumerate() {
            w.write_record([&(i + 1).to_string(), a.as_str(), &format!("{p:.6}")]).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionRow {
    pub id: String,
    pub author: String,
    pub predicted: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionContingency {
    pub toolkit_version: String,
    pub seed: u64,
    pub corpus_fingerprint: String,
    pub authors: Vec<String>,
    /// `matrix[true][predicted]`, indexed like `authors`.
    pub matrix: Vec<Vec<usize>>,
    pub rows: Vec<AttributionRow>,
    pub correct: usize,
    pub total: usize,
    pub vanilla_accuracy: f64,
    pub macro_f1: f64,
}

/// Leave-one-out attribution over the texts of every author with at least
/// `max(min_texts, 2)` texts.
pub fn attribution_contingency(
    prepared: &PreparedCorpus,
    min_texts: usize,
    config: &PipelineConfig,
    seed: u64,
) -> Result<AttributionContingency, ExperimentError> {
    let authors = candidate_authors(&prepared.corpus, min_texts.max(2));
    if authors.len() < 2 {
        return Err(ExperimentError::TooFewCandidates(authors.len()));
    }
    let held_out: Vec<usize> = prepared
        .corpus
        .documents
        .iter()
        .enumerate()
        .filter(|(_, d)| !d.is_disputed() && authors.contains(&d.author))
        .map(|(i, _)| i)
        .collect();
    let rows = held_out
        .par_iter()
        .map(|&h| {
            let doc = &prepared.corpus.documents[h];
            let fold_seed = derive_seed(seed, &format!("aa-fold/{}", doc.id), 0);
            let training = prepared.training(&config.segmentation, |d, dd| {
                d != h && authors.contains(&dd.author)
            });
            let model = fit_attributor(prepared, &training, config, fold_seed)?;
            let pred = model.predict(prepared.full_text(h))?;
            let truth = model.model.classes.iter().position(|c| c == &doc.author);
            Ok(AttributionRow {
                id: doc.id.clone(),
                author: doc.author.clone(),
                predicted: model.model.classes[pred.predicted].clone(),
                confidence: truth.map_or(0.0, |t| pred.posteriors[t]),
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let index = |a: &str| authors.iter().position(|x| x == a).expect("candidate author");
    let mut matrix = vec![vec![0; authors.len()]; authors.len()];
    for r in &rows {
        matrix[index(&r.author)][index(&r.predicted)] += 1;
    }
    let tables: Vec<ContingencyTable> = authors
        .iter()
        .map(|a| ContingencyTable::from_pairs(rows.iter().map(|r| (&r.author == a, &r.predicted == a))))
        .collect();
    let correct = (0..authors.len()).map(|i| matrix[i][i]).sum();
    let overall = ContingencyTable {
        tp: correct,
        fp: rows.len() - correct,
        ..Default::default()
    };
    Ok(AttributionContingency {
        toolkit_version: crate::VERSION.to_string(),
        seed,
        corpus_fingerprint: prepared.corpus.fingerprint.clone(),
        macro_f1: macro_f1(&tables)?,
        vanilla_accuracy: vanilla_accuracy(&overall)?,
        correct,
        total: rows.len(),
        authors,
        matrix,
        rows,
    })
}

impl AttributionContingency {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.authors.iter().cloned());
        w.write_record(&header).unwrap();
        for (a, row) in self.authors.iter().zip(&self.matrix) {
            let mut rec = vec![a.clone()];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}
