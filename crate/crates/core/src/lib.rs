//! Stylometric authorship verification and attribution.
//!
//! The pipeline: documents are normalized, tokenized and cut into
//! sentence-aligned segments ([`corpus`]); stylometric blocks are extracted
//! and TFIDF-weighted ([`features`]); the minority class is oversampled with
//! distributional random oversampling ([`dro`]); L2-regularized logistic
//! regression is trained ([`learner`]) and evaluated leave-one-out
//! ([`eval`]). [`experiments`] drives ablation, verification of a disputed
//! text, attribution and similarity ranking.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod dro;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod features;
pub mod learner;
pub mod pipeline;
pub mod rng;
pub mod sparse;

pub use sparse::SparseVector;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 over length-prefixed parts.
pub fn fingerprint<I, B>(parts: I) -> String
where
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for p in parts {
        let p = p.as_ref();
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    format!("{:x}", h.finalize())
}
