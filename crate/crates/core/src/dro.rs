//! Distributional random oversampling.
//!
//! Every natural feature gets a categorical profile over latent indices,
//! one index per training instance, proportional to the feature's weight in
//! that instance. A vector is extended by repeatedly drawing a feature in
//! proportion to its weight and then a latent index from that feature's
//! profile; the normalized latent histogram is appended to the vector.
//! Synthetic minority examples are further draws from the same process.
//!
//! Training instances are by default extended with leave-document-out
//! profiles: draws never land on the latent indices of instances cut from
//! the same document, as they cannot for a held-out text.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::DroError;
use crate::rng;
use crate::sparse::SparseVector;

pub const DEFAULT_TARGET_RATIO: f64 = 0.20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroConfig {
    #[serde(default = "default_ratio")]
    pub target_positive_ratio: f64,
    /// Number of latent columns; `None` uses one per training instance.
    #[serde(default)]
    pub latent_dimension: Option<usize>,
    /// Draws per extension; `None` uses the instance's feature-occurrence count.
    #[serde(default)]
    pub samples_per_extension: Option<usize>,
    /// Extend training instances without the profile mass contributed by
    /// their own document.
    #[serde(default = "default_true")]
    pub leave_document_out: bool,
}

fn default_true() -> bool {
    true
}

fn default_ratio() -> f64 {
    DEFAULT_TARGET_RATIO
}

impl Default for DroConfig {
    fn default() -> Self {
        DroConfig {
            target_positive_ratio: DEFAULT_TARGET_RATIO,
            latent_dimension: None,
            samples_per_extension: None,
            leave_document_out: true,
        }
    }
}

impl DroConfig {
    pub fn validate(&self) -> Result<(), DroError> {
        let r = self.target_positive_ratio;
        if !(r > 0.0 && r < 1.0) {
            return Err(DroError::InvalidRatio(r));
        }
        if self.latent_dimension == Some(0) {
            return Err(DroError::ZeroLatentDimension);
        }
        Ok(())
    }

    pub fn samples_for(&self, occurrences: u64) -> usize {
        self.samples_per_extension.unwrap_or(occurrences as usize)
    }
}

/// Cumulative weights over a sorted support; sampling is a binary search.
#[derive(Debug, Clone, PartialEq, Default)]
struct Categorical {
    support: Vec<usize>,
    cumulative: Vec<f64>,
}

impl Categorical {
    fn from_weights(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut support = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (i, w) in pairs {
            if w > 0.0 {
                acc += w;
                support.push(i);
                cumulative.push(acc);
            }
        }
        Categorical {
            support,
            cumulative,
        }
    }

    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.gen::<f64>() * self.total();
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.support[k.min(self.support.len() - 1)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionalProfiles {
    natural_dim: usize,
    latent_dim: usize,
    n_instances: usize,
    /// Empty for features with no training weight; those use the uniform
    /// fallback.
    profiles: Vec<Categorical>,
    /// Per feature, `(instance, weight)` by increasing instance.
    columns: Vec<Vec<(usize, f64)>>,
}

impl DistributionalProfiles {
    /// Fits one profile per column of `matrix`. Instance `i` feeds latent
    /// index `i % latent_dimension`.
    pub fn fit(matrix: &[SparseVector], latent_dimension: Option<usize>) -> Result<Self, DroError> {
        let first = matrix.first().ok_or(DroError::EmptyMatrix)?;
        let natural_dim = first.dim;
        let latent_dim = latent_dimension.unwrap_or(matrix.len());
        if latent_dim == 0 {
            return Err(DroError::ZeroLatentDimension);
        }
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); natural_dim];
        for (i, row) in matrix.iter().enumerate() {
            if row.dim != natural_dim {
                return Err(DroError::DimensionMismatch {
                    expected: natural_dim,
                    found: row.dim,
                });
            }
            for (f, w) in row.iter() {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(DroError::InvalidWeight(f));
                }
                if w > 0.0 {
                    columns[f].push((i, w));
                }
            }
        }
        let profiles = columns
            .iter()
            .map(|col| {
                let mut col: Vec<(usize, f64)> = col.iter().map(|&(i, w)| (i % latent_dim, w)).collect();
                if latent_dim < matrix.len() {
                    col.sort_by_key(|&(l, _)| l);
                    col.dedup_by(|b, a| {
                        if a.0 == b.0 {
                            a.1 += b.1;
                            true
                        } else {
                            false
                        }
                    });
                }
                Categorical::from_weights(col)
            })
            .collect();
        Ok(DistributionalProfiles {
            natural_dim,
            latent_dim,
            n_instances: matrix.len(),
            profiles,
            columns,
        })
    }

    pub fn natural_dim(&self) -> usize {
        self.natural_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    /// Rows of the matrix the profiles were fitted on.
    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    /// The normalized profile of `feature` as `(latent index, probability)`.
    pub fn distribution(&self, feature: usize) -> Vec<(usize, f64)> {
        let p = &self.profiles[feature];
        if p.support.is_empty() {
            let u = 1.0 / self.latent_dim as f64;
            return (0..self.latent_dim).map(|i| (i, u)).collect();
        }
        let total = p.total();
        let mut prev = 0.0;
        p.support
            .iter()
            .zip(&p.cumulative)
            .map(|(&i, &c)| {
                let w = c - prev;
                prev = c;
                (i, w / total)
            })
            .collect()
    }

    /// Draws `count` latent indices for `feature`, ignoring the mass of the
    /// instances in `exclude` (sorted).
    fn sample_latent<R: Rng + ?Sized>(
        &self,
        feature: usize,
        count: u64,
        exclude: &[usize],
        counts: &mut [u64],
        rng: &mut R,
    ) {
        let full = &self.profiles[feature];
        let reduced;
        let p = if exclude.is_empty() {
            full
        } else {
            let mut col: Vec<(usize, f64)> = self.columns[feature]
                .iter()
                .filter(|(i, _)| exclude.binary_search(i).is_err())
                .map(|&(i, w)| (i % self.latent_dim, w))
                .collect();
            col.sort_by_key(|&(l, _)| l);
            reduced = Categorical::from_weights(col);
            &reduced
        };
        for _ in 0..count {
            let latent = if p.support.is_empty() {
                rng.gen_range(0..self.latent_dim)
            } else {
                p.sample(rng)
            };
            counts[latent] += 1;
        }
    }

    /// Unnormalized latent histogram from `samples` draws.
    pub fn latent_counts<R: Rng + ?Sized>(
        &self,
        vector: &SparseVector,
        samples: usize,
        rng: &mut R,
    ) -> Result<Vec<u64>, DroError> {
        self.latent_counts_excluding(vector, samples, &[], rng)
    }

    /// Like [`Self::latent_counts`], with the profiles recomputed without
    /// the training instances in `exclude`. Features left with no mass fall
    /// back to uniform.
    pub fn latent_counts_excluding<R: Rng + ?Sized>(
        &self,
        vector: &SparseVector,
        samples: usize,
        exclude: &[usize],
        rng: &mut R,
    ) -> Result<Vec<u64>, DroError> {
        if vector.dim != self.natural_dim {
            return Err(DroError::DimensionMismatch {
                expected: self.natural_dim,
                found: vector.dim,
            });
        }
        if let Some((f, _)) = vector.iter().find(|&(_, w)| !(w.is_finite() && w >= 0.0)) {
            return Err(DroError::InvalidWeight(f));
        }
        let mut counts = vec![0u64; self.latent_dim];
        if vector.is_zero() {
            return Ok(counts);
        }
        if samples == 0 {
            return Err(DroError::ZeroSamples);
        }
        let mut exclude = exclude.to_vec();
        exclude.sort_unstable();
        // Draw the features first, then each feature's latent indices in
        // feature order.
        let features = Categorical::from_weights(vector.iter());
        let mut per_feature = std::collections::BTreeMap::new();
        for _ in 0..samples {
            *per_feature.entry(features.sample(rng)).or_insert(0u64) += 1;
        }
        for (f, c) in per_feature {
            self.sample_latent(f, c, &exclude, &mut counts, rng);
        }
        Ok(counts)
    }

    /// Appends an L2-normalized latent block to `vector`; the natural block
    /// is copied unchanged.
    pub fn extend<R: Rng + ?Sized>(
        &self,
        vector: &SparseVector,
        samples: usize,
        rng: &mut R,
    ) -> Result<SparseVector, DroError> {
        self.extend_excluding(vector, samples, &[], rng)
    }

    /// [`Self::extend`] with leave-out profiles; see
    /// [`Self::latent_counts_excluding`].
    pub fn extend_excluding<R: Rng + ?Sized>(
        &self,
        vector: &SparseVector,
        samples: usize,
        exclude: &[usize],
        rng: &mut R,
    ) -> Result<SparseVector, DroError> {
        let counts = self.latent_counts_excluding(vector, samples, exclude, rng)?;
        let norm = counts.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        let latent = SparseVector::from_pairs(
            self.latent_dim,
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (i, c as f64 / norm))
                .collect(),
        );
        Ok(vector.concat(&latent))
    }

    /// Extends `vector` with the random stream keyed by (`seed`, `id`, `replica`).
    pub fn extend_seeded(
        &self,
        vector: &SparseVector,
        samples: usize,
        seed: u64,
        id: &str,
        replica: u64,
    ) -> Result<SparseVector, DroError> {
        self.extend_seeded_excluding(vector, samples, seed, id, replica, &[])
    }

    pub fn extend_seeded_excluding(
        &self,
        vector: &SparseVector,
        samples: usize,
        seed: u64,
        id: &str,
        replica: u64,
        exclude: &[usize],
    ) -> Result<SparseVector, DroError> {
        let mut r = rng::stream(seed, &format!("dro/{id}"), replica);
        self.extend_excluding(vector, samples, exclude, &mut r)
    }
}

/// Synthetic positives needed to bring the positive share to `ratio`,
/// rounding the target positive count to the nearest integer.
pub fn synthetic_count(n_pos: usize, n_neg: usize, ratio: f64) -> usize {
    let target = (n_neg as f64 * ratio / (1.0 - ratio)).round() as usize;
    target.saturating_sub(n_pos)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVector {
    pub id: String,
    pub vector: SparseVector,
    pub positive: bool,
    /// Feature occurrences behind `vector`, used as the default draw count.
    pub occurrences: u64,
    /// Source document; instances sharing it are left out of each other's
    /// profiles when `leave_document_out` is set.
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedExample {
    pub id: String,
    /// The original instance this example was generated from.
    pub source_id: String,
    pub positive: bool,
    pub synthetic: bool,
    pub vector: SparseVector,
}

/// Extends every example once and adds synthetic positives, each a fresh
/// extension of a uniformly chosen original positive. `profiles` must have
/// been fitted on the examples' vectors in order when `leave_document_out`
/// is set.
pub fn oversample(
    examples: &[LabeledVector],
    profiles: &DistributionalProfiles,
    config: &DroConfig,
    seed: u64,
) -> Result<Vec<ExtendedExample>, DroError> {
    config.validate()?;
    let positives: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].positive).collect();
    if positives.is_empty() {
        return Err(DroError::NoPositives);
    }
    let n_neg = examples.len() - positives.len();
    let extra = synthetic_count(positives.len(), n_neg, config.target_positive_ratio);
    if config.leave_document_out && profiles.n_instances() != examples.len() {
        return Err(DroError::DimensionMismatch {
            expected: profiles.n_instances(),
            found: examples.len(),
        });
    }
    let mut by_group: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    if config.leave_document_out {
        for (i, ex) in examples.iter().enumerate() {
            by_group.entry(ex.group).or_default().push(i);
        }
    }

    // (source, replica) jobs; replica 0 is the base extension.
    let mut jobs: Vec<(usize, u64)> = (0..examples.len()).map(|i| (i, 0)).collect();
    let mut used = vec![0u64; examples.len()];
    let mut chooser = rng::stream(seed, "dro/sources", 0);
    for _ in 0..extra {
        let src = positives[chooser.gen_range(0..positives.len())];
        used[src] += 1;
        jobs.push((src, used[src]));
    }

    jobs.par_iter()
        .map(|&(src, replica)| {
            let ex = &examples[src];
            let samples = config.samples_for(ex.occurrences);
            let exclude = by_group.get(&ex.group).map_or(&[][..], |v| v.as_slice());
            let vector =
                profiles.extend_seeded_excluding(&ex.vector, samples, seed, &ex.id, replica, exclude)?;
            Ok(ExtendedExample {
                id: if replica == 0 {
                    ex.id.clone()
                } else {
                    format!("{}~dro{}", ex.id, replica)
                },
                source_id: ex.id.clone(),
                positive: ex.positive,
                synthetic: replica > 0,
                vector,
            })
        })
        .collect()
}
