use std::cmp::Ordering;
use std::collections::BTreeSet;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ExperimentError;
use crate::eval::{loo_run, loo_run_on, LooReport};
use crate::features::BlockKind;
use crate::pipeline::{PipelineConfig, PreparedCorpus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AblationMode {
    /// Score each candidate pool by a full leave-one-out F1.
    Exact,
    /// Score candidate pools on the 10 texts hardest for the initial pool.
    #[value(name = "hardest10")]
    Hardest10,
}

/// Score of a pool, compared lexicographically. Exact mode: (F1, soft-F1).
/// Hardest-10 mode: (accuracy, mean confidence in the true class).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolScore {
    pub primary: f64,
    pub secondary: f64,
}

impl PartialOrd for PoolScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(
            self.primary
                .total_cmp(&other.primary)
                .then(self.secondary.total_cmp(&other.secondary)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub pool: Vec<BlockKind>,
    pub removed: BlockKind,
    pub score: PoolScore,
}

/// One accepted removal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationIteration {
    /// The pool before the removal.
    pub pool: Vec<BlockKind>,
    pub pool_score: PoolScore,
    pub removed: BlockKind,
    /// Score of the pool without `removed`.
    pub score: PoolScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub toolkit_version: String,
    pub seed: u64,
    pub corpus_fingerprint: String,
    pub mode: AblationMode,
    pub initial_pool: Vec<BlockKind>,
    pub initial_score: PoolScore,
    /// The guiding texts in hardest-10 mode.
    pub guide_texts: Vec<String>,
    pub iterations: Vec<AblationIteration>,
    /// Every candidate evaluated, in order.
    pub evaluations: Vec<CandidateScore>,
    pub final_pool: Vec<BlockKind>,
}

const GUIDE_TEXTS: usize = 10;

fn with_pool(config: &PipelineConfig, pool: &BTreeSet<BlockKind>) -> PipelineConfig {
    let mut c = config.clone();
    c.features.enabled_blocks = pool.clone();
    c
}

fn exact_score(r: &LooReport) -> PoolScore {
    PoolScore {
        primary: r.f1,
        secondary: r.soft_f1,
    }
}

fn guide_score(r: &LooReport) -> PoolScore {
    let n = r.records.len() as f64;
    PoolScore {
        primary: r.records.iter().filter(|x| x.correct()).count() as f64 / n,
        secondary: r.records.iter().map(|x| x.confidence).sum::<f64>() / n,
    }
}

/// Greedy backward elimination: repeatedly drop the block whose removal
/// scores best, as long as that score is no worse than the current pool's.
pub fn ablate(
    prepared: &PreparedCorpus,
    config: &PipelineConfig,
    initial_pool: &BTreeSet<BlockKind>,
    mode: AblationMode,
    seed: u64,
) -> Result<AblationReport, ExperimentError> {
    if initial_pool.is_empty() {
        return Err(ExperimentError::EmptyPool);
    }
    let first = loo_run(prepared, &with_pool(config, initial_pool), seed)?;
    let guide: Vec<String> = match mode {
        AblationMode::Exact => Vec::new(),
        AblationMode::Hardest10 => first.hardest(GUIDE_TEXTS).iter().map(|r| r.id.clone()).collect(),
    };
    let score = |pool: &BTreeSet<BlockKind>| -> Result<PoolScore, ExperimentError> {
        let cfg = with_pool(config, pool);
        Ok(match mode {
            AblationMode::Exact => exact_score(&loo_run(prepared, &cfg, seed)?),
            AblationMode::Hardest10 => guide_score(&loo_run_on(prepared, &cfg, seed, Some(&guide))?),
        })
    };
    let initial_score = match mode {
        AblationMode::Exact => exact_score(&first),
        AblationMode::Hardest10 => score(initial_pool)?,
    };

    let mut pool = initial_pool.clone();
    let mut current = initial_score;
    let mut iterations = Vec::new();
    let mut evaluations = Vec::new();
    while pool.len() > 1 {
        // Candidate pools are scored in parallel, then scanned in block order
        // so that ties resolve the same way on any thread count.
        let candidates: Vec<BlockKind> = pool.iter().copied().collect();
        let scored = candidates
            .par_iter()
            .map(|&block| {
                let mut reduced = pool.clone();
                reduced.remove(&block);
                score(&reduced).map(|s| (block, reduced, s))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        let mut best: Option<(BlockKind, PoolScore)> = None;
        for (block, reduced, s) in scored {
            info!("pool without {block}: {s:?}");
            evaluations.push(CandidateScore {
                pool: reduced.into_iter().collect(),
                removed: block,
                score: s,
            });
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((block, s));
            }
        }
        let (block, s) = best.expect("pool has at least two blocks");
        if s < current {
            break;
        }
        iterations.push(AblationIteration {
            pool: pool.iter().copied().collect(),
            pool_score: current,
            removed: block,
            score: s,
        });
        pool.remove(&block);
        current = s;
    }

    Ok(AblationReport {
        toolkit_version: crate::VERSION.to_string(),
        seed,
        corpus_fingerprint: prepared.corpus.fingerprint.clone(),
        mode,
        initial_pool: initial_pool.iter().copied().collect(),
        initial_score,
        guide_texts: guide,
        iterations,
        evaluations,
        final_pool: pool.into_iter().collect(),
    })
}

impl AblationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per evaluated candidate pool.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "removed", "pool", "primary", "secondary", "accepted"]).unwrap();
        w.write_record([
            "0",
            "",
            &join(&self.initial_pool),
            &format!("{:.6}", self.initial_score.primary),
            &format!("{:.6}", self.initial_score.secondary),
            "",
        ])
        .unwrap();
        for (k, e) in self.evaluations.iter().enumerate() {
            let accepted = self
                .iterations
                .iter()
                .any(|it| it.removed == e.removed && join_pool_minus(&it.pool, it.removed) == join(&e.pool));
            w.write_record([
                (k + 1).to_string().as_str(),
                e.removed.name(),
                &join(&e.pool),
                &format!("{:.6}", e.score.primary),
                &format!("{:.6}", e.score.secondary),
                if accepted { "yes" } else { "no" },
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

fn join(pool: &[BlockKind]) -> String {
    pool.iter().map(|b| b.name()).collect::<Vec<_>>().join("+")
}

fn join_pool_minus(pool: &[BlockKind], removed: BlockKind) -> String {
    let rest: Vec<BlockKind> = pool.iter().copied().filter(|&b| b != removed).collect();
    join(&rest)
}
