use serde::{Deserialize, Serialize};

use crate::error::ExperimentError;
use crate::pipeline::{fit_verifier, PipelineConfig, PreparedCorpus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub toolkit_version: String,
    pub seed: u64,
    pub corpus_fingerprint: String,
    pub config: PipelineConfig,
    pub disputed_id: String,
    /// Positive-class posterior of each random version of the disputed text.
    pub replicas: Vec<f64>,
    pub median: f64,
    pub predicted_class: String,
    pub fitted_c: f64,
    pub training_instances: usize,
    pub synthetic_positives: usize,
}

/// Median; the mean of the two middle values for an even count.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of no values");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Trains the verifier on every labelled text and segment and classifies
/// `n_replicas` random versions of the disputed text. Without oversampling
/// there is a single deterministic version.
pub fn verify_disputed(
    prepared: &PreparedCorpus,
    disputed_id: &str,
    config: &PipelineConfig,
    n_replicas: usize,
    seed: u64,
) -> Result<Verdict, ExperimentError> {
    let disputed = prepared
        .doc_index(disputed_id)
        .ok_or_else(|| ExperimentError::UnknownDocument(disputed_id.to_string()))?;
    if !prepared.corpus.documents[disputed].is_disputed() {
        return Err(ExperimentError::DisputedIsLabelled(disputed_id.to_string()));
    }
    if n_replicas == 0 {
        return Err(ExperimentError::ZeroReplicas);
    }
    let training = prepared.training(&config.segmentation, |_, _| true);
    let verifier = fit_verifier(prepared, &training, config, seed)?;
    let n = if config.use_dro { n_replicas } else { 1 };
    let target = prepared.full_text(disputed);
    let replicas = (0..n as u64)
        .map(|r| verifier.predict(target, seed, r).map(|p| p.positive()))
        .collect::<Result<Vec<f64>, _>>()?;
    let median = median(&replicas);
    let classes = &verifier.model.classes;
    Ok(Verdict {
        toolkit_version: crate::VERSION.to_string(),
        seed,
        corpus_fingerprint: prepared.corpus.fingerprint.clone(),
        config: config.clone(),
        disputed_id: disputed_id.to_string(),
        replicas,
        median,
        predicted_class: classes[usize::from(median > 0.5)].clone(),
        fitted_c: verifier.tune.c,
        training_instances: verifier.training_ids.len(),
        synthetic_positives: verifier.n_synthetic,
    })
}
