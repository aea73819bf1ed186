//! Optimal-block selection among blocks sharing a number.

use std::cmp::Ordering;

use crate::chain::{Block, Transaction};

use super::{ConsensusError, Ledger};

/// A block plus the chain data fork choice needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainContext {
    pub block: Block,
    pub transactions: Vec<Transaction>,
    /// Transactions from genesis through this block.
    pub cumulative_tx_count: u64,
    /// Ledger after applying this block.
    pub ledger: Ledger,
}

impl ChainContext {
    pub fn genesis() -> Self {
        ChainContext {
            block: crate::chain::genesis(),
            transactions: Vec::new(),
            cumulative_tx_count: 0,
            ledger: Ledger::new(),
        }
    }
}

/// Ranks two same-numbered blocks. `Greater` means `a` is preferred:
/// more transactions on its chain, then a higher puzzle score, then the
/// lower hash.
pub fn compare_blocks(a: &ChainContext, b: &ChainContext) -> Result<Ordering, ConsensusError> {
    if a.block.number != b.block.number {
        return Err(ConsensusError::NumberMismatch {
            a: a.block.number,
            b: b.block.number,
        });
    }
    Ok(preference(a, b))
}

pub(crate) fn preference(a: &ChainContext, b: &ChainContext) -> Ordering {
    a.cumulative_tx_count
        .cmp(&b.cumulative_tx_count)
        .then(a.block.score.cmp(&b.block.score))
        .then(b.block.hash.cmp(&a.block.hash))
}

/// The unique optimal block among candidates of one number.
pub fn select_optimal<'a, I>(candidates: I) -> Result<&'a ChainContext, ConsensusError>
where
    I: IntoIterator<Item = &'a ChainContext>,
{
    let mut best: Option<&ChainContext> = None;
    for candidate in candidates {
        best = Some(match best {
            None => candidate,
            Some(current) => {
                if compare_blocks(candidate, current)? == Ordering::Greater {
                    candidate
                } else {
                    current
                }
            }
        });
    }
    best.ok_or(ConsensusError::EmptyCandidateSet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Hash;

    fn ctx(count: u64, score: u32, first_hash_byte: u8) -> ChainContext {
        let mut c = ChainContext::genesis();
        c.block.number = 4;
        c.cumulative_tx_count = count;
        c.block.score = score;
        c.block.hash = Hash([first_hash_byte; 32]);
        c
    }

    #[test]
    fn lexicographic_cases() {
        let a = ctx(10, 7, 1);
        let b = ctx(10, 9, 2);
        assert_eq!(compare_blocks(&a, &b).unwrap(), Ordering::Less);

        let a = ctx(11, 0, 1);
        let b = ctx(10, 38, 2);
        assert_eq!(compare_blocks(&a, &b).unwrap(), Ordering::Greater);

        let a = ctx(10, 5, 0x0A);
        let b = ctx(10, 5, 0x0B);
        assert_eq!(compare_blocks(&a, &b).unwrap(), Ordering::Greater);
    }

    #[test]
    fn errors() {
        let mut other = ctx(1, 1, 1);
        other.block.number = 5;
        assert_eq!(
            compare_blocks(&ctx(1, 1, 1), &other),
            Err(ConsensusError::NumberMismatch { a: 4, b: 5 })
        );
        assert_eq!(
            select_optimal(std::iter::empty()),
            Err(ConsensusError::EmptyCandidateSet)
        );
        let single = ctx(1, 1, 1);
        assert_eq!(select_optimal([&single]).unwrap(), &single);
    }
}
