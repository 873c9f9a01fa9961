use serde::{Deserialize, Serialize};

/// A sparse real vector with strictly increasing column indices and no
/// stored zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from `(column, value)` pairs in any order. Zeros are
    /// dropped; duplicate columns are summed.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            assert!(i < dim, "column {i} out of range for dimension {dim}");
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let mut out = SparseVector {
            dim,
            indices,
            values,
        };
        out.drop_zeros();
        out
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector::from_pairs(values.len(), values.iter().copied().enumerate().collect())
    }

    fn drop_zeros(&mut self) {
        let mut k = 0;
        for j in 0..self.indices.len() {
            if self.values[j] != 0.0 {
                self.indices[k] = self.indices[j];
                self.values[k] = self.values[j];
                k += 1;
            }
        }
        self.indices.truncate(k);
        self.values.truncate(k);
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, column: usize) -> f64 {
        match self.indices.binary_search(&column) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b, mut acc) = (0, 0, 0.0);
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales the entries in `range` (by position, not column) to unit norm.
    pub(crate) fn normalize_positions(&mut self, range: std::ops::Range<usize>) {
        let norm = self.values[range.clone()].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.values[range].iter_mut().for_each(|v| *v /= norm);
        }
    }

    /// Cosine similarity; zero if either vector is zero.
    pub fn cosine(&self, other: &SparseVector) -> f64 {
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            0.0
        } else {
            self.dot(other) / denom
        }
    }

    /// Appends `tail`, shifting its columns past this vector's dimension.
    pub fn concat(&self, tail: &SparseVector) -> SparseVector {
        let mut indices = self.indices.clone();
        indices.extend(tail.indices.iter().map(|i| i + self.dim));
        let mut values = self.values.clone();
        values.extend_from_slice(&tail.values);
        SparseVector {
            dim: self.dim + tail.dim,
            indices,
            values,
        }
    }

    /// The entries with column in `range`, re-based to start at zero.
    pub fn slice(&self, range: std::ops::Range<usize>) -> SparseVector {
        let pairs = self
            .iter()
            .filter(|(i, _)| range.contains(i))
            .map(|(i, v)| (i - range.start, v))
            .collect();
        SparseVector::from_pairs(range.len(), pairs)
    }

    /// Applies a column permutation: column `i` moves to `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> SparseVector {
        SparseVector::from_pairs(self.dim, self.iter().map(|(i, v)| (perm[i], v)).collect())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}
