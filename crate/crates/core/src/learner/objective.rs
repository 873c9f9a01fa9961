//! Regularized negative log-likelihoods of binary and multinomial logistic
//! regression. Both are averaged over examples; the bias is unpenalized.

use super::lbfgs::Objective;
use crate::sparse::SparseVector;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Parameters: `dim` weights followed by the bias.
pub struct BinaryObjective<'a> {
    pub x: &'a [SparseVector],
    pub y: &'a [bool],
    pub c: f64,
    pub dim: usize,
}

impl Objective for BinaryObjective<'_> {
    fn dim(&self) -> usize {
        self.dim + 1
    }

    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (w, b) = theta.split_at(self.dim);
        let n = self.x.len() as f64;
        let mut loss = 0.0;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (xi, &yi) in self.x.iter().zip(self.y) {
            let z = xi.dot_dense(w) + b[0];
            let target = if yi { 1.0 } else { 0.0 };
            loss += softplus(z) - target * z;
            let r = sigmoid(z) - target;
            for (j, v) in xi.iter() {
                grad[j] += r * v;
            }
            grad[self.dim] += r;
        }
        let penalty = dot(w, w) / (2.0 * self.c);
        for j in 0..self.dim {
            grad[j] = (grad[j] + w[j] / self.c) / n;
        }
        grad[self.dim] /= n;
        (loss + penalty) / n
    }
}

/// Parameters: a `classes × dim` row-major weight matrix followed by one
/// bias per class.
pub struct MulticlassObjective<'a> {
    pub x: &'a [SparseVector],
    pub y: &'a [usize],
    pub classes: usize,
    pub c: f64,
    pub dim: usize,
}

/// Softmax of `scores` in place.
pub fn softmax(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    scores.iter_mut().for_each(|s| *s /= sum);
}

impl Objective for MulticlassObjective<'_> {
    fn dim(&self) -> usize {
        self.classes * (self.dim + 1)
    }

    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.classes;
        let d = self.dim;
        let (w, b) = theta.split_at(k * d);
        let n = self.x.len() as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let mut scores = vec![0.0; k];
        for (xi, &yi) in self.x.iter().zip(self.y) {
            for c in 0..k {
                scores[c] = xi.dot_dense(&w[c * d..(c + 1) * d]) + b[c];
            }
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
            loss += lse - scores[yi];
            softmax(&mut scores);
            for c in 0..k {
                let r = scores[c] - if c == yi { 1.0 } else { 0.0 };
                for (j, v) in xi.iter() {
                    grad[c * d + j] += r * v;
                }
                grad[k * d + c] += r;
            }
        }
        let penalty = dot(w, w) / (2.0 * self.c);
        for j in 0..k * d {
            grad[j] = (grad[j] + w[j] / self.c) / n;
        }
        for c in 0..k {
            grad[k * d + c] /= n;
        }
        (loss + penalty) / n
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
