//! L2-regularized logistic regression: a binary verifier and a multinomial
//! attributor, C selection by inner cross-validation, and linear
//! explanations.

pub mod lbfgs;
pub mod objective;
mod tune;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::LearnerError;
use crate::sparse::SparseVector;
use lbfgs::{LbfgsOptions, Objective};
use objective::{sigmoid, softmax, BinaryObjective, MulticlassObjective};
pub use tune::{stratified_folds, stratified_group_folds, tune_c_binary, tune_c_multiclass, TuneOutcome};

pub const DEFAULT_C_GRID: [f64; 7] = [0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Inverse regularization strength used when no tuning happens.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default = "default_folds")]
    pub inner_folds: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_c() -> f64 {
    1.0
}
fn default_grid() -> Vec<f64> {
    DEFAULT_C_GRID.to_vec()
}
fn default_folds() -> usize {
    5
}
fn default_tolerance() -> f64 {
    1e-5
}
fn default_max_iterations() -> usize {
    500
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: default_c(),
            c_grid: default_grid(),
            inner_folds: default_folds(),
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::Config(m.to_string()));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("C must be positive");
        }
        if self.c_grid.is_empty() {
            return bad("C grid is empty");
        }
        if self.c_grid.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return bad("C grid values must be positive");
        }
        if self.c_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("C grid must be strictly increasing");
        }
        if self.inner_folds < 2 {
            return bad("at least 2 inner folds are required");
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return bad("tolerance must be positive");
        }
        Ok(())
    }

    pub fn with_c(&self, c: f64) -> TrainConfig {
        TrainConfig { c, ..self.clone() }
    }

    fn lbfgs(&self) -> LbfgsOptions {
        LbfgsOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            ..Default::default()
        }
    }
}

const MODEL_FORMAT: &str = "avkit-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    /// Binary models: `[negative, positive]`.
    pub classes: Vec<String>,
    /// One row for a binary model, one per class otherwise.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub c: f64,
    pub dim: usize,
    /// Fingerprint of the feature space the model was trained in.
    pub fingerprint: String,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    /// Posterior probability of each of the model's classes.
    pub posteriors: Vec<f64>,
    pub predicted: usize,
}

impl Prediction {
    /// Posterior of the positive class of a binary model.
    pub fn positive(&self) -> f64 {
        self.posteriors[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub column: usize,
    pub feature: String,
    pub value: f64,
}

fn check_rows(x: &[SparseVector], n_labels: usize) -> Result<usize, LearnerError> {
    let first = x.first().ok_or(LearnerError::Empty)?;
    if n_labels != x.len() {
        return Err(LearnerError::Config(format!(
            "{} examples but {n_labels} labels",
            x.len()
        )));
    }
    for (i, row) in x.iter().enumerate() {
        if row.dim != first.dim {
            return Err(LearnerError::DimensionMismatch {
                expected: first.dim,
                found: row.dim,
            });
        }
        if row.values().iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::NonFinite(i));
        }
    }
    Ok(first.dim)
}

/// Trains a binary classifier; `y[i]` is true for the positive class.
pub fn train_binary(
    x: &[SparseVector],
    y: &[bool],
    config: &TrainConfig,
) -> Result<TrainedModel, LearnerError> {
    config.validate()?;
    let dim = check_rows(x, y.len())?;
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(LearnerError::SingleClass);
    }
    let obj = BinaryObjective {
        x,
        y,
        c: config.c,
        dim,
    };
    let r = lbfgs::minimize(&obj, vec![0.0; obj.dim()], &config.lbfgs());
    let (w, b) = r.x.split_at(dim);
    Ok(TrainedModel {
        classes: vec!["negative".into(), "positive".into()],
        weights: vec![w.to_vec()],
        bias: b.to_vec(),
        c: config.c,
        dim,
        fingerprint: String::new(),
        iterations: r.iterations,
        converged: r.converged,
    })
}

/// Trains a multinomial classifier; classes are the sorted distinct labels.
pub fn train_multiclass(
    x: &[SparseVector],
    y: &[String],
    config: &TrainConfig,
) -> Result<TrainedModel, LearnerError> {
    config.validate()?;
    let dim = check_rows(x, y.len())?;
    let mut classes: Vec<String> = y.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(LearnerError::SingleClass);
    }
    let idx: Vec<usize> = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label among classes"))
        .collect();
    let k = classes.len();
    let obj = MulticlassObjective {
        x,
        y: &idx,
        classes: k,
        c: config.c,
        dim,
    };
    let r = lbfgs::minimize(&obj, vec![0.0; obj.dim()], &config.lbfgs());
    let (w, b) = r.x.split_at(k * dim);
    Ok(TrainedModel {
        classes,
        weights: (0..k).map(|c| w[c * dim..(c + 1) * dim].to_vec()).collect(),
        bias: b.to_vec(),
        c: config.c,
        dim,
        fingerprint: String::new(),
        iterations: r.iterations,
        converged: r.converged,
    })
}

impl TrainedModel {
    pub fn is_binary(&self) -> bool {
        self.weights.len() == 1
    }

    /// Linear scores: one for binary models, one per class otherwise.
    pub fn scores(&self, x: &SparseVector) -> Result<Vec<f64>, LearnerError> {
        if x.dim != self.dim {
            return Err(LearnerError::DimensionMismatch {
                expected: self.dim,
                found: x.dim,
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| x.dot_dense(w) + b)
            .collect())
    }

    pub fn predict_proba(&self, id: &str, x: &SparseVector) -> Result<Prediction, LearnerError> {
        let scores = self.scores(x)?;
        let posteriors = if self.is_binary() {
            let p = sigmoid(scores[0]);
            vec![1.0 - p, p]
        } else {
            let mut s = scores;
            softmax(&mut s);
            s
        };
        // Ties go to the lower class index.
        let predicted = posteriors
            .iter()
            .enumerate()
            .fold(0, |best, (i, &p)| if p > posteriors[best] { i } else { best });
        Ok(Prediction {
            instance_id: id.to_string(),
            posteriors,
            predicted,
        })
    }

    /// Like [`predict_proba`](Self::predict_proba) but refuses inputs from a
    /// different feature space.
    pub fn predict_checked(
        &self,
        id: &str,
        x: &SparseVector,
        fingerprint: &str,
    ) -> Result<Prediction, LearnerError> {
        if fingerprint != self.fingerprint {
            return Err(LearnerError::FingerprintMismatch {
                expected: self.fingerprint.clone(),
                found: fingerprint.to_string(),
            });
        }
        self.predict_proba(id, x)
    }

    /// The `top_k` largest per-feature contributions `weight × value`, by
    /// absolute value.
    pub fn explain(
        &self,
        x: &SparseVector,
        top_k: usize,
        name: &dyn Fn(usize) -> String,
    ) -> Result<Vec<Contribution>, LearnerError> {
        if !self.is_binary() {
            return Err(LearnerError::NotBinary);
        }
        if x.dim != self.dim {
            return Err(LearnerError::DimensionMismatch {
                expected: self.dim,
                found: x.dim,
            });
        }
        let w = &self.weights[0];
        let mut out: Vec<Contribution> = x
            .iter()
            .map(|(j, v)| Contribution {
                column: j,
                feature: name(j),
                value: w[j] * v,
            })
            .filter(|c| c.value != 0.0)
            .collect();
        out.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()).then(a.column.cmp(&b.column)));
        out.truncate(top_k);
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let doc = serde_json::json!({
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "model": self,
        });
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnerError> {
        let bad = |m: String| LearnerError::Format(m);
        let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if doc["format"] != MODEL_FORMAT {
            return Err(bad("not a model file".into()));
        }
        if doc["version"] != MODEL_VERSION {
            return Err(bad(format!("unsupported version {}", doc["version"])));
        }
        let model: TrainedModel =
            serde_json::from_value(doc["model"].clone()).map_err(|e| bad(e.to_string()))?;
        if model.weights.iter().any(|w| w.len() != model.dim) || model.bias.len() != model.weights.len() {
            return Err(bad("weight shape does not match the declared dimension".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self, LearnerError> {
        let text = std::fs::read_to_string(path).map_err(|e| LearnerError::Format(e.to_string()))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[f64]) -> Vec<SparseVector> {
        xs.iter().map(|&v| SparseVector::from_dense(&[v])).collect()
    }

    #[test]
    fn separable_points() {
        let x = pts(&[-1.0, 1.0]);
        let m = train_binary(&x, &[false, true], &TrainConfig::default()).unwrap();
        assert!(m.weights[0][0] > 0.0);
        let hi = m.predict_proba("p", &x[1]).unwrap().positive();
        let lo = m.predict_proba("n", &x[0]).unwrap().positive();
        assert!(hi > 0.5 && 0.5 > lo);
    }

    #[test]
    fn strong_regularization_flattens_posteriors() {
        let x = pts(&[-2.0, -1.0, 1.0, 2.0]);
        let y = [false, false, true, true];
        let m = train_binary(&x, &y, &TrainConfig::default().with_c(1e-9)).unwrap();
        assert!(m.weights[0][0].abs() < 1e-6);
        for xi in &x {
            assert!((m.predict_proba("", xi).unwrap().positive() - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn single_class_and_non_finite_inputs() {
        let x = pts(&[1.0, 2.0]);
        assert!(matches!(
            train_binary(&x, &[true, true], &TrainConfig::default()),
            Err(LearnerError::SingleClass)
        ));
        let bad = pts(&[1.0, f64::NAN]);
        assert!(matches!(
            train_binary(&bad, &[true, false], &TrainConfig::default()),
            Err(LearnerError::NonFinite(1))
        ));
        let y = vec!["a".to_string(), "a".to_string()];
        assert!(matches!(
            train_multiclass(&x, &y, &TrainConfig::default()),
            Err(LearnerError::SingleClass)
        ));
    }

    fn binary_model(w: f64, b: f64) -> TrainedModel {
        TrainedModel {
            classes: vec!["neg".into(), "pos".into()],
            weights: vec![vec![w]],
            bias: vec![b],
            c: 1.0,
            dim: 1,
            fingerprint: "fp".into(),
            iterations: 0,
            converged: true,
        }
    }

    #[test]
    fn posterior_closed_forms() {
        let m = binary_model(1.0, 0.0);
        let p0 = m.predict_proba("", &SparseVector::zeros(1)).unwrap();
        assert_eq!(p0.positive(), 0.5);
        let p = m.predict_proba("", &SparseVector::from_dense(&[3f64.ln()])).unwrap();
        assert!((p.positive() - 0.75).abs() < 1e-15);
        assert_eq!(p.predicted, 1);
        assert!(matches!(
            m.predict_proba("", &SparseVector::zeros(2)),
            Err(LearnerError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn multiclass_recovers_training_points() {
        let x = vec![
            SparseVector::from_dense(&[1.0, 0.0, 0.0]),
            SparseVector::from_dense(&[0.0, 1.0, 0.0]),
            SparseVector::from_dense(&[0.0, 0.0, 1.0]),
        ];
        let y: Vec<String> = ["b", "a", "c"].iter().map(|s| s.to_string()).collect();
        let m = train_multiclass(&x, &y, &TrainConfig::default().with_c(100.0)).unwrap();
        assert_eq!(m.classes, vec!["a", "b", "c"]);
        for (xi, yi) in x.iter().zip(&y) {
            let p = m.predict_proba("", xi).unwrap();
            assert_eq!(p.posteriors.len(), 3);
            assert!((p.posteriors.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(&m.classes[p.predicted], yi);
        }
    }

    #[test]
    fn explanation_is_linear() {
        let m = TrainedModel {
            weights: vec![vec![2.0, -3.0, 0.5]],
            dim: 3,
            bias: vec![0.25],
            ..binary_model(0.0, 0.0)
        };
        let x = SparseVector::from_dense(&[1.0, 1.0, 0.0]);
        let name = |j: usize| format!("f{j}");
        let ex = m.explain(&x, 10, &name).unwrap();
        assert_eq!(ex[0].feature, "f1");
        let total: f64 = ex.iter().map(|c| c.value).sum::<f64>() + m.bias[0];
        assert!((total - m.scores(&x).unwrap()[0]).abs() < 1e-12);
        assert!(m.explain(&SparseVector::zeros(3), 5, &name).unwrap().is_empty());
        assert_eq!(m.explain(&x, 1, &name).unwrap().len(), 1);
    }

    #[test]
    fn model_file_round_trip_and_fingerprint_guard() {
        let m = binary_model(0.5, -0.1);
        let back = TrainedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let x = SparseVector::from_dense(&[1.0]);
        assert!(back.predict_checked("", &x, "fp").is_ok());
        assert!(matches!(
            back.predict_checked("", &x, "other"),
            Err(LearnerError::FingerprintMismatch { .. })
        ));
        assert!(TrainedModel::from_json("{\"format\":\"x\"}").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let mut c = TrainConfig {
            c_grid: vec![1.0, 0.1],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.c_grid = vec![];
        assert!(c.validate().is_err());
        let c = TrainConfig { tolerance: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
