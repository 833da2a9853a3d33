use std::ops::Range;

use crate::error::{Error, Result};

/// A deterministic split of `[0, K)` into `N` contiguous blocks.
///
/// Blocks are disjoint, cover the whole index range, and differ in size by at
/// most one element: the first `K mod N` blocks hold `ceil(K / N)` elements and
/// the rest hold `floor(K / N)`. With `K < N` the trailing blocks are empty and
/// the ring protocol simply moves empty payloads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    total_len: usize,
    offsets: Vec<usize>,
}

/// Splits `K` elements into `N` balanced contiguous blocks.
pub fn partition(total_len: usize, block_count: usize) -> Result<BlockPartition> {
    if block_count == 0 {
        return Err(Error::invalid("block count must be at least 1"));
    }
    let base = total_len / block_count;
    let remainder = total_len % block_count;
    let mut offsets = Vec::with_capacity(block_count + 1);
    let mut cursor = 0;
    offsets.push(0);
    for block in 0..block_count {
        cursor += base + usize::from(block < remainder);
        offsets.push(cursor);
    }
    debug_assert_eq!(cursor, total_len);
    Ok(BlockPartition { total_len, offsets })
}

impl BlockPartition {
    /// Element count K the partition covers.
    pub fn total_len(&self) -> usize {
        self.total_len
    }

    pub fn block_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Half-open element range `[offsets[b], offsets[b+1])` of block `b`.
    pub fn block_range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    pub fn block_len(&self, block: usize) -> usize {
        self.offsets[block + 1] - self.offsets[block]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        (0..self.block_count()).map(|b| self.block_len(b)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uneven_split_puts_larger_blocks_first() {
        let p = partition(10, 4).unwrap();
        assert_eq!(p.offsets(), &[0, 3, 6, 8, 10]);
        assert_eq!(p.block_sizes(), vec![3, 3, 2, 2]);
    }

    #[test]
    fn even_split() {
        let p = partition(8, 4).unwrap();
        assert_eq!(p.block_sizes(), vec![2, 2, 2, 2]);
    }

    #[test]
    fn more_blocks_than_elements_yields_empty_blocks() {
        let p = partition(2, 4).unwrap();
        assert_eq!(p.block_sizes(), vec![1, 1, 0, 0]);
    }

    #[test]
    fn zero_blocks_rejected() {
        assert!(partition(10, 0).is_err());
    }

    #[test]
    fn zero_length_partitions() {
        let p = partition(0, 3).unwrap();
        assert_eq!(p.block_sizes(), vec![0, 0, 0]);
        assert_eq!(p.total_len(), 0);
    }

    #[test]
    fn blocks_concatenate_to_full_range() {
        for k in 0..=64 {
            for n in 1..=16 {
                let p = partition(k, n).unwrap();
                let mut covered = Vec::new();
                for b in 0..p.block_count() {
                    covered.extend(p.block_range(b));
                }
                let expected: Vec<usize> = (0..k).collect();
                assert_eq!(covered, expected, "K={k} N={n}");
                let max = p.block_sizes().iter().copied().max().unwrap();
                let min = p.block_sizes().iter().copied().min().unwrap();
                assert!(max - min <= 1, "K={k} N={n} sizes differ by more than 1");
            }
        }
    }
}
