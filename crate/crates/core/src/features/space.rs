use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::ops::Range;

use super::{BlockKind, InstanceFeatures};
use crate::error::FeatureError;
use crate::sparse::SparseVector;

const FILE_MAGIC: &str = "# avkit feature space v1";

/// Vocabulary and IDF statistics of one feature block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpace {
    pub kind: BlockKind,
    /// First column of the block.
    pub offset: usize,
    pub names: Vec<String>,
    pub df: Vec<u32>,
    pub idf: Vec<f64>,
    index: HashMap<String, usize>,
}

impl BlockSpace {
    fn new(kind: BlockKind, offset: usize, names: Vec<String>, df: Vec<u32>, idf: Vec<f64>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        BlockSpace {
            kind,
            offset,
            names,
            df,
            idf,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn columns(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.index.get(name).map(|i| self.offset + i)
    }
}

/// Smoothed inverse document frequency; always finite and ≥ 1.
pub fn idf(n_instances: usize, df: u32) -> f64 {
    ((1.0 + n_instances as f64) / (1.0 + f64::from(df))).ln() + 1.0
}

/// The vocabulary, document frequencies and IDF weights learned from a
/// training set. Columns are ordered by block, then by feature name.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    pub blocks: Vec<BlockSpace>,
    pub n_training: usize,
    pub dim: usize,
}

impl FeatureSpace {
    pub fn fit<'a, I>(training: I, blocks: &BTreeSet<BlockKind>) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = &'a InstanceFeatures>,
    {
        let mut df: BTreeMap<BlockKind, BTreeMap<&'a str, u32>> =
            blocks.iter().map(|&b| (b, BTreeMap::new())).collect();
        let mut n = 0;
        for inst in training {
            n += 1;
            for (kind, counts) in &inst.blocks {
                if let Some(block_df) = df.get_mut(kind) {
                    for (name, &c) in counts {
                        if c > 0 {
                            *block_df.entry(name.as_str()).or_insert(0) += 1;
                        }
                    }
                }
            }
        }
        if n == 0 {
            return Err(FeatureError::EmptyTrainingSet);
        }
        let mut offset = 0;
        let mut spaces = Vec::with_capacity(df.len());
        for (kind, block_df) in df {
            let names: Vec<String> = block_df.keys().map(|s| s.to_string()).collect();
            let dfs: Vec<u32> = block_df.values().copied().collect();
            let idfs = dfs.iter().map(|&d| idf(n, d)).collect();
            let block = BlockSpace::new(kind, offset, names, dfs, idfs);
            offset += block.len();
            spaces.push(block);
        }
        Ok(FeatureSpace {
            blocks: spaces,
            n_training: n,
            dim: offset,
        })
    }

    pub fn block(&self, kind: BlockKind) -> Option<&BlockSpace> {
        self.blocks.iter().find(|b| b.kind == kind)
    }

    pub fn kinds(&self) -> BTreeSet<BlockKind> {
        self.blocks.iter().map(|b| b.kind).collect()
    }

    /// `block/name` label of a column.
    pub fn feature_name(&self, column: usize) -> Option<String> {
        let b = self.blocks.iter().find(|b| b.columns().contains(&column))?;
        Some(format!("{}/{}", b.kind, b.names[column - b.offset]))
    }

    /// TFIDF vector with within-block relative frequencies and unit-norm
    /// blocks. Features outside the space are ignored.
    pub fn vectorize(&self, inst: &InstanceFeatures) -> SparseVector {
        let mut pairs = Vec::new();
        let mut block_ranges = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let start = pairs.len();
            if let Some(counts) = inst.block(block.kind) {
                let total: u64 = counts.values().map(|&c| u64::from(c)).sum();
                if total > 0 {
                    for (name, &c) in counts {
                        if let Some(&local) = block.index.get(name) {
                            let tf = f64::from(c) / total as f64;
                            pairs.push((block.offset + local, tf * block.idf[local]));
                        }
                    }
                }
            }
            block_ranges.push(start..pairs.len());
        }
        // Blocks occupy disjoint, increasing column ranges, so sorting keeps
        // each block's entries contiguous at the same positions.
        let mut v = SparseVector::from_pairs(self.dim, pairs);
        let mut pos = 0;
        for block in &self.blocks {
            let cols = block.columns();
            let start = pos;
            while pos < v.nnz() && cols.contains(&v.indices()[pos]) {
                pos += 1;
            }
            v.normalize_positions(start..pos);
        }
        v
    }

    /// Stable hash of the space's columns and weights.
    pub fn fingerprint(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        crate::fingerprint([buf.as_slice()])
    }

    /// Writes the space as a tab-separated file: one row per feature with its
    /// block, name, document frequency and IDF.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{FILE_MAGIC}")?;
        writeln!(w, "# n_training\t{}", self.n_training)?;
        writeln!(w, "# blocks\t{}", self.blocks.iter().map(|b| b.kind.name()).collect::<Vec<_>>().join(","))?;
        writeln!(w, "block\tfeature\tdf\tidf")?;
        for block in &self.blocks {
            for i in 0..block.len() {
                writeln!(w, "{}\t{}\t{}\t{}", block.kind, block.names[i], block.df[i], block.idf[i])?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, FeatureError> {
        let bad = |m: &str| FeatureError::Format(m.to_string());
        let mut lines = r.lines();
        let mut next = || -> Result<String, FeatureError> {
            lines
                .next()
                .ok_or_else(|| bad("truncated header"))?
                .map_err(|e| FeatureError::Format(e.to_string()))
        };
        if next()? != FILE_MAGIC {
            return Err(bad("missing or unsupported version header"));
        }
        let n_training = next()?
            .strip_prefix("# n_training\t")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("missing n_training"))?;
        let kinds_line = next()?;
        let kinds = kinds_line
            .strip_prefix("# blocks\t")
            .ok_or_else(|| bad("missing block list"))?;
        // (terms, document frequencies, idf) per block
        type Columns = (Vec<String>, Vec<u32>, Vec<f64>);
        let mut per_block: BTreeMap<BlockKind, Columns> = BTreeMap::new();
        for k in kinds.split(',').filter(|k| !k.is_empty()) {
            per_block.insert(k.parse()?, Default::default());
        }
        next()?;
        let mut rows = Vec::new();
        while let Ok(line) = next() {
            rows.push(line);
        }
        for line in rows {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(bad(&format!("expected 4 columns in `{line}`")));
            }
            let kind: BlockKind = cols[0].parse()?;
            let entry = per_block
                .get_mut(&kind)
                .ok_or_else(|| bad("row for an undeclared block"))?;
            entry.0.push(cols[1].to_string());
            entry.1.push(cols[2].parse().map_err(|_| bad("bad df"))?);
            entry.2.push(cols[3].parse().map_err(|_| bad("bad idf"))?);
        }
        let mut offset = 0;
        let mut blocks = Vec::new();
        for (kind, (names, df, idf)) in per_block {
            let b = BlockSpace::new(kind, offset, names, df, idf);
            offset += b.len();
            blocks.push(b);
        }
        Ok(FeatureSpace {
            blocks,
            n_training,
            dim: offset,
        })
    }
}
