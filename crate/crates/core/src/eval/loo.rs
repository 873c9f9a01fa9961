use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{f1, soft_f1, vanilla_accuracy, ContingencyTable};
use crate::error::EvalError;
use crate::pipeline::{fit_verifier, PipelineConfig, PreparedCorpus};
use crate::rng::derive_seed;

/// Outcome for one held-out text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooRecord {
    pub id: String,
    pub author: String,
    pub true_class: String,
    pub predicted_class: String,
    /// Posterior of the positive class.
    pub posterior: f64,
    /// Posterior of the true class.
    pub confidence: f64,
    pub fitted_c: f64,
    pub inner_folds: usize,
    pub converged: bool,
}

impl LooRecord {
    pub fn correct(&self) -> bool {
        self.true_class == self.predicted_class
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFold {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub toolkit_version: String,
    pub seed: u64,
    pub corpus_fingerprint: String,
    pub config: PipelineConfig,
    pub records: Vec<LooRecord>,
    pub skipped: Vec<SkippedFold>,
    pub table: ContingencyTable,
    pub f1: f64,
    pub soft_f1: f64,
    pub vanilla_accuracy: f64,
    /// Wall-clock seconds per evaluated fold; not part of the serialized
    /// report so that reports are reproducible byte for byte.
    #[serde(skip)]
    pub fold_seconds: Vec<(String, f64)>,
}

impl LooReport {
    fn positive(&self, r: &LooRecord) -> bool {
        r.author == self.config.positive_author
    }

    pub fn recompute_table(&self) -> ContingencyTable {
        let pos = &self.config.positive_author;
        ContingencyTable::from_pairs(
            self.records
                .iter()
                .map(|r| (self.positive(r), &r.predicted_class == pos)),
        )
    }

    pub fn recompute_soft_f1(&self) -> Result<f64, EvalError> {
        soft_f1(self.records.iter().map(|r| (r.posterior, self.positive(r))))
    }

    /// Texts by increasing confidence in their true class.
    pub fn hardest(&self, n: usize) -> Vec<&LooRecord> {
        let mut v: Vec<&LooRecord> = self.records.iter().collect();
        v.sort_by(|a, b| a.confidence.total_cmp(&b.confidence).then_with(|| a.id.cmp(&b.id)));
        v.truncate(n);
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-text rows: id, author, true class, predicted class, posterior, C.
    pub fn predictions_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "author", "true_class", "predicted_class", "posterior", "fitted_c"])
            .unwrap();
        for r in &self.records {
            w.write_record([
                r.id.as_str(),
                &r.author,
                &r.true_class,
                &r.predicted_class,
                &format!("{:.6}", r.posterior),
                &r.fitted_c.to_string(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    pub fn summary(&self) -> String {
        let t = &self.table;
        let mut s = format!(
            "leave-one-out over {} texts (positive author: {})\n\
             TP={} FP={} FN={} TN={}\nF1={:.3}  soft-F1={:.3}  accuracy={:.3}\n",
            self.records.len(),
            self.config.positive_author,
            t.tp,
            t.fp,
            t.fn_,
            t.tn,
            self.f1,
            self.soft_f1,
            self.vanilla_accuracy
        );
        for sk in &self.skipped {
            s.push_str(&format!("skipped {}: {}\n", sk.id, sk.reason));
        }
        s.push_str("hardest texts:\n");
        for r in self.hardest(10) {
            s.push_str(&format!(
                "  {:<24} {:<20} {} {:.3}\n",
                r.id,
                r.author,
                if r.correct() { "ok " } else { "ERR" },
                r.confidence
            ));
        }
        s
    }
}

/// Leave-one-out over every labelled text of the corpus.
pub fn loo_run(prepared: &PreparedCorpus, config: &PipelineConfig, seed: u64) -> Result<LooReport, EvalError> {
    loo_run_on(prepared, config, seed, None)
}

/// Leave-one-out restricted to the held-out texts in `targets` (all
/// labelled texts if `None`). Training for each fold always uses every
/// other labelled text.
pub fn loo_run_on(
    prepared: &PreparedCorpus,
    config: &PipelineConfig,
    seed: u64,
    targets: Option<&[String]>,
) -> Result<LooReport, EvalError> {
    config.validate()?;
    let pos = &config.positive_author;
    if !prepared.corpus.labelled().any(|d| &d.author == pos) {
        return Err(EvalError::NoPositiveAuthor(pos.clone()));
    }
    let held_out: Vec<usize> = prepared
        .corpus
        .documents
        .iter()
        .enumerate()
        .filter(|(_, d)| !d.is_disputed())
        .filter(|(_, d)| targets.is_none_or(|t| t.contains(&d.id)))
        .map(|(i, _)| i)
        .collect();

    let outcomes: Vec<Result<(LooRecord, f64), SkippedFold>> = held_out
        .par_iter()
        .map(|&h| {
            let start = Instant::now();
            let doc = &prepared.corpus.documents[h];
            let fold_seed = derive_seed(seed, &format!("fold/{}", doc.id), 0);
            let training = prepared.training(&config.segmentation, |d, _| d != h);
            let skip = |reason: String| SkippedFold {
                id: doc.id.clone(),
                reason,
            };
            let verifier = fit_verifier(prepared, &training, config, fold_seed)
                .map_err(|e| skip(e.to_string()))?;
            let pred = verifier
                .predict(prepared.full_text(h), fold_seed, 0)
                .map_err(|e| skip(e.to_string()))?;
            let classes = &verifier.model.classes;
            let is_pos = &doc.author == pos;
            let record = LooRecord {
                id: doc.id.clone(),
                author: doc.author.clone(),
                true_class: classes[usize::from(is_pos)].clone(),
                predicted_class: classes[pred.predicted].clone(),
                posterior: pred.positive(),
                confidence: pred.posteriors[usize::from(is_pos)],
                fitted_c: verifier.tune.c,
                inner_folds: verifier.tune.folds,
                converged: verifier.model.converged,
            };
            Ok((record, start.elapsed().as_secs_f64()))
        })
        .collect();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut fold_seconds = Vec::new();
    for o in outcomes {
        match o {
            Ok((r, secs)) => {
                fold_seconds.push((r.id.clone(), secs));
                records.push(r);
            }
            Err(s) => {
                warn!("fold {} skipped: {}", s.id, s.reason);
                skipped.push(s);
            }
        }
    }
    if records.is_empty() {
        return Err(EvalError::NoFolds);
    }
    let mut report = LooReport {
        toolkit_version: crate::VERSION.to_string(),
        seed,
        corpus_fingerprint: prepared.corpus.fingerprint.clone(),
        config: config.clone(),
        records,
        skipped,
        table: ContingencyTable::default(),
        f1: 0.0,
        soft_f1: 0.0,
        vanilla_accuracy: 0.0,
        fold_seconds,
    };
    report.table = report.recompute_table();
    report.f1 = f1(&report.table);
    report.soft_f1 = report.recompute_soft_f1()?;
    report.vanilla_accuracy = vanilla_accuracy(&report.table)?;
    Ok(report)
}
