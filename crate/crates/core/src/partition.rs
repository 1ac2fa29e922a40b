//! Blocks' basis: a partition of the index set into ordered blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition `I = I_1 ∪ … ∪ I_n` of `{0, …, index_count - 1}` into
/// non-empty, pairwise disjoint blocks. The order of indices inside a block
/// is the fixed linear order used to form `X(I_k)`.
///
/// Serialized as a list of 1-based index lists, e.g. `[[1,2],[3,4]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct BlockPartition {
    index_count: usize,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

/// Validates 1-based block lists against `index_count`.
pub fn validate_partition(blocks: &[Vec<usize>], index_count: usize) -> Result<BlockPartition> {
    let mut zero_based = Vec::with_capacity(blocks.len());
    for block in blocks {
        let mut b = Vec::with_capacity(block.len());
        for &i in block {
            if i == 0 || i > index_count {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    count: index_count,
                });
            }
            b.push(i - 1);
        }
        zero_based.push(b);
    }
    BlockPartition::from_zero_based(zero_based, index_count)
}

impl BlockPartition {
    pub fn from_zero_based(blocks: Vec<Vec<usize>>, index_count: usize) -> Result<Self> {
        if index_count == 0 {
            return Err(Error::InvalidArgument("index set must be non-empty".into()));
        }
        let mut block_of = vec![usize::MAX; index_count];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::EmptyBlock(b + 1));
            }
            for &i in block {
                if i >= index_count {
                    return Err(Error::IndexOutOfRange {
                        index: i + 1,
                        count: index_count,
                    });
                }
                if block_of[i] != usize::MAX {
                    return Err(Error::OverlappingBlocks(i + 1));
                }
                block_of[i] = b;
            }
        }
        if let Some(i) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::UncoveredIndex(i + 1));
        }
        Ok(Self {
            index_count,
            blocks,
            block_of,
        })
    }

    /// Every index in its own block; block association reduces to association.
    pub fn singletons(index_count: usize) -> Self {
        Self::from_zero_based((0..index_count).map(|i| vec![i]).collect(), index_count)
            .expect("singletons form a partition")
    }

    /// One block holding everything.
    pub fn whole(index_count: usize) -> Self {
        Self::from_zero_based(vec![(0..index_count).collect()], index_count)
            .expect("a single block forms a partition")
    }

    /// Consecutive blocks of the given sizes, e.g. `[d; n]` for the
    /// increments of a `d`-dimensional process on `n` intervals.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut blocks = Vec::with_capacity(sizes.len());
        let mut next = 0;
        for &s in sizes {
            blocks.push((next..next + s).collect());
            next += s;
        }
        Self::from_zero_based(blocks, next)
    }

    pub fn index_count(&self) -> usize {
        self.index_count
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn block_of(&self, index: usize) -> usize {
        self.block_of[index]
    }

    pub fn same_block(&self, k: usize, l: usize) -> bool {
        self.block_of[k] == self.block_of[l]
    }

    /// All pairs `k < l` lying in different blocks.
    pub fn cross_block_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.index_count;
        (0..n)
            .flat_map(move |k| ((k + 1)..n).map(move |l| (k, l)))
            .filter(move |&(k, l)| !self.same_block(k, l))
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|i| i + 1).collect())
            .collect()
    }
}

impl TryFrom<Vec<Vec<usize>>> for BlockPartition {
    type Error = Error;

    fn try_from(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let count = blocks.iter().map(Vec::len).sum();
        validate_partition(&blocks, count)
    }
}

impl From<BlockPartition> for Vec<Vec<usize>> {
    fn from(p: BlockPartition) -> Self {
        p.to_one_based()
    }
}
