//! Selection of C by stratified inner cross-validation.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_binary, train_multiclass, TrainConfig};
use crate::error::LearnerError;
use crate::eval::{f1, macro_f1, ContingencyTable};
use crate::rng;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub c: f64,
    /// Inner folds actually used; below the configured count when a class is
    /// too small. Zero means no cross-validation was possible and the
    /// configured default C was kept.
    pub folds: usize,
    /// `(C, score)` for each grid value evaluated.
    pub scores: Vec<(f64, f64)>,
}

/// Assigns each example to one of `folds` folds, spreading every class
/// evenly. Returns the fold index of each example.
pub fn stratified_folds(labels: &[usize], n_classes: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut assignment = vec![0; labels.len()];
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng::stream(seed, "tune/folds", class as u64));
        for (pos, i) in members.into_iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    assignment
}

/// Like [`stratified_folds`], but every group (the full text, segments and
/// synthetic copies drawn from one document) lands in a single fold. Groups
/// are assumed label-homogeneous; a group's class is that of its first member.
pub fn stratified_group_folds(
    labels: &[usize],
    groups: &[usize],
    n_classes: usize,
    folds: usize,
    seed: u64,
) -> Vec<usize> {
    let mut group_fold = std::collections::HashMap::new();
    for class in 0..n_classes {
        let mut members: Vec<usize> = Vec::new();
        for i in 0..labels.len() {
            if labels[i] == class && !members.contains(&groups[i]) && !group_fold.contains_key(&groups[i]) {
                members.push(groups[i]);
            }
        }
        members.sort_unstable();
        members.shuffle(&mut rng::stream(seed, "tune/folds", class as u64));
        for (pos, g) in members.into_iter().enumerate() {
            group_fold.insert(g, pos % folds);
        }
    }
    groups.iter().map(|g| group_fold[g]).collect()
}

/// Number of distinct groups in the smallest class.
fn smallest_class(labels: &[usize], groups: Option<&[usize]>, n_classes: usize) -> usize {
    (0..n_classes)
        .map(|c| {
            let mut ids: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] == c)
                .map(|i| groups.map_or(i, |g| g[i]))
                .collect();
            ids.sort_unstable();
            ids.dedup();
            ids.len()
        })
        .min()
        .unwrap_or(0)
}

fn pick_best(scores: &[(f64, f64)]) -> f64 {
    // Grid is increasing; a later value must be strictly better to win.
    scores
        .iter()
        .fold(scores[0], |best, &s| if s.1 > best.1 { s } else { best })
        .0
}

/// Generic driver: `fit_predict(train_idx, test_idx, c)` returns predicted
/// class indices for `test_idx`.
fn tune<F>(
    labels: &[usize],
    groups: Option<&[usize]>,
    n_classes: usize,
    config: &TrainConfig,
    seed: u64,
    score: impl Fn(&[usize], &[usize]) -> f64,
    fit_predict: F,
) -> Result<TuneOutcome, LearnerError>
where
    F: Fn(&[usize], &[usize], f64) -> Result<Vec<usize>, LearnerError> + Sync,
{
    config.validate()?;
    if config.c_grid.len() == 1 {
        return Ok(TuneOutcome {
            c: config.c_grid[0],
            folds: 0,
            scores: Vec::new(),
        });
    }
    let smallest = smallest_class(labels, groups, n_classes);
    let folds = config.inner_folds.min(smallest);
    if folds < 2 {
        log::warn!("a class has {smallest} member(s); C not tuned, using {}", config.c);
        return Ok(TuneOutcome {
            c: config.c,
            folds: 0,
            scores: Vec::new(),
        });
    }
    if folds < config.inner_folds {
        log::info!("inner folds reduced from {} to {folds}", config.inner_folds);
    }
    let assignment = match groups {
        Some(g) => stratified_group_folds(labels, g, n_classes, folds, seed),
        None => stratified_folds(labels, n_classes, folds, seed),
    };
    let jobs: Vec<(usize, usize)> = (0..config.c_grid.len())
        .flat_map(|g| (0..folds).map(move |f| (g, f)))
        .collect();
    let results: Vec<Vec<(usize, usize)>> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let train: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != f).collect();
            let test: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == f).collect();
            let pred = fit_predict(&train, &test, config.c_grid[g])?;
            Ok(test.iter().map(|&i| labels[i]).zip(pred).collect())
        })
        .collect::<Result<_, LearnerError>>()?;

    let scores: Vec<(f64, f64)> = config
        .c_grid
        .iter()
        .enumerate()
        .map(|(g, &c)| {
            let pairs: Vec<(usize, usize)> = results[g * folds..(g + 1) * folds].concat();
            let truth: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let pred: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            (c, score(&truth, &pred))
        })
        .collect();
    Ok(TuneOutcome {
        c: pick_best(&scores),
        folds,
        scores,
    })
}

fn subset(x: &[SparseVector], idx: &[usize]) -> Vec<SparseVector> {
    idx.iter().map(|&i| x[i].clone()).collect()
}

/// Picks the grid value of C with the best pooled inner-fold F1 of the
/// positive class; ties go to the smaller C. With `groups`, examples sharing
/// a group id are never split across folds.
pub fn tune_c_binary(
    x: &[SparseVector],
    y: &[bool],
    groups: Option<&[usize]>,
    config: &TrainConfig,
    seed: u64,
) -> Result<TuneOutcome, LearnerError> {
    let labels: Vec<usize> = y.iter().map(|&p| usize::from(p)).collect();
    let score = |truth: &[usize], pred: &[usize]| {
        let table = ContingencyTable::from_pairs(truth.iter().zip(pred).map(|(&t, &p)| (t == 1, p == 1)));
        f1(&table)
    };
    tune(&labels, groups, 2, config, seed, score, |train, test, c| {
        let tx = subset(x, train);
        let ty: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let model = train_binary(&tx, &ty, &config.with_c(c))?;
        test.iter()
            .map(|&i| model.predict_proba("", &x[i]).map(|p| p.predicted))
            .collect()
    })
}

/// Multiclass counterpart of [`tune_c_binary`], scored by macro-F1.
pub fn tune_c_multiclass(
    x: &[SparseVector],
    y: &[String],
    groups: Option<&[usize]>,
    config: &TrainConfig,
    seed: u64,
) -> Result<TuneOutcome, LearnerError> {
    let mut classes: Vec<&String> = y.iter().collect();
    classes.sort();
    classes.dedup();
    let labels: Vec<usize> = y.iter().map(|l| classes.binary_search(&l).unwrap()).collect();
    let k = classes.len();
    let score = |truth: &[usize], pred: &[usize]| {
        let tables: Vec<ContingencyTable> = (0..k)
            .map(|c| ContingencyTable::from_pairs(truth.iter().zip(pred).map(|(&t, &p)| (t == c, p == c))))
            .collect();
        macro_f1(&tables).unwrap_or(0.0)
    };
    tune(&labels, groups, k, config, seed, score, |train, test, c| {
        let tx = subset(x, train);
        let ty: Vec<String> = train.iter().map(|&i| y[i].clone()).collect();
        let model = train_multiclass(&tx, &ty, &config.with_c(c))?;
        // Map the fold model's class indices back to the global ones.
        test.iter()
            .map(|&i| {
                model.predict_proba("", &x[i]).map(|p| {
                    let name = &model.classes[p.predicted];
                    classes.binary_search(&name).unwrap()
                })
            })
            .collect()
    })
}
