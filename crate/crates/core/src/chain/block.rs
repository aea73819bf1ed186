use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::puzzle::{generate_puzzle, Puzzle, Score, Solution};

use super::tx::Transaction;
use super::types::{Address, BlockId, Hash};
use super::ChainError;

/// Default upper bound on the magic-number search.
pub const DEFAULT_MAGIC_CAP: u64 = 1_000_000;

/// Every block field that feeds the hash, except the magic number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTemplate {
    pub number: u64,
    pub timestamp: u64,
    pub prev_hash: Hash,
    pub solver: Address,
    pub tx_ids: Vec<Hash>,
}

impl BlockTemplate {
    fn prefix(&self) -> String {
        format!("{}{}", self.number, self.timestamp)
    }

    fn suffix(&self) -> String {
        let mut text = String::with_capacity(64 * (2 + self.tx_ids.len()));
        text.push_str(&self.prev_hash.to_hex());
        text.push_str(&self.solver.to_hex());
        for id in &self.tx_ids {
            text.push_str(&id.to_hex());
        }
        text
    }

    /// Number, timestamp, magic, previous hash, solver and transaction hashes
    /// as decimal/hex text, concatenated in that order.
    pub fn preimage(&self, magic: u64) -> Vec<u8> {
        format!("{}{}{}", self.prefix(), magic, self.suffix()).into_bytes()
    }

    pub fn hash_with(&self, magic: u64) -> Hash {
        Hash::digest(&self.preimage(magic))
    }

    /// Smallest magic number whose block hash yields a zero-score puzzle.
    ///
    /// The magic sits inside the preimage, so every candidate is re-hashed;
    /// the number/timestamp prefix state is reused across candidates.
    pub fn find_magic(&self, cap: u64) -> Result<MagicSearch, ChainError> {
        let mut prefix = Sha256::new();
        prefix.update(self.prefix().as_bytes());
        let suffix = self.suffix();
        for magic in 0..=cap {
            let mut hasher = prefix.clone();
            hasher.update(magic.to_string().as_bytes());
            hasher.update(suffix.as_bytes());
            let hash = Hash(hasher.finalize().into());
            let puzzle = generate_puzzle(&hash.0).expect("sha-256 digest is 32 bytes");
            if puzzle.score() == 0 {
                return Ok(MagicSearch {
                    magic,
                    hash,
                    start_puzzle: puzzle,
                });
            }
        }
        Err(ChainError::SearchBudgetExceeded(cap))
    }
}

/// Result of [`BlockTemplate::find_magic`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MagicSearch {
    pub magic: u64,
    pub hash: Hash,
    pub start_puzzle: Puzzle,
}

/// A block with all twelve recorded fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub number: u64,
    pub prev_hash: Hash,
    pub tx_ids: Vec<Hash>,
    pub solver: Address,
    pub magic: u64,
    pub timestamp: u64,
    pub hash: Hash,
    pub start_puzzle: Puzzle,
    pub solution: Solution,
    pub end_puzzle: Puzzle,
    pub score: Score,
}

impl Block {
    /// Assembles a block from a template, its magic search and a solution.
    pub fn finalize(
        id: BlockId,
        template: BlockTemplate,
        search: MagicSearch,
        solution: Solution,
    ) -> Result<Block, ChainError> {
        let end_puzzle = search.start_puzzle.apply_solution(&solution)?;
        Ok(Block {
            id,
            number: template.number,
            prev_hash: template.prev_hash,
            tx_ids: template.tx_ids,
            solver: template.solver,
            magic: search.magic,
            timestamp: template.timestamp,
            hash: search.hash,
            start_puzzle: search.start_puzzle,
            score: end_puzzle.score(),
            end_puzzle,
            solution,
        })
    }

    pub fn template(&self) -> BlockTemplate {
        BlockTemplate {
            number: self.number,
            timestamp: self.timestamp,
            prev_hash: self.prev_hash,
            solver: self.solver,
            tx_ids: self.tx_ids.clone(),
        }
    }

    pub fn is_genesis(&self) -> bool {
        self.number == 0
    }

    pub fn recompute_hash(&self) -> Hash {
        self.template().hash_with(self.magic)
    }
}

/// The network-wide first block: number 0, zero previous hash, timestamp 0,
/// zero solver, magic 0, no transactions and an empty solution.
pub fn genesis() -> Block {
    let template = BlockTemplate {
        number: 0,
        timestamp: 0,
        prev_hash: Hash::ZERO,
        solver: Address::ZERO,
        tx_ids: Vec::new(),
    };
    let hash = template.hash_with(0);
    let start = generate_puzzle(&hash.0).expect("sha-256 digest is 32 bytes");
    Block {
        id: BlockId::ZERO,
        number: 0,
        prev_hash: Hash::ZERO,
        tx_ids: Vec::new(),
        solver: Address::ZERO,
        magic: 0,
        timestamp: 0,
        hash,
        score: start.score(),
        end_puzzle: start.clone(),
        start_puzzle: start,
        solution: Solution::empty(),
    }
}

/// A block together with the transactions it lists, in `tx_ids` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockBundle {
    pub block: Block,
    pub transactions: Vec<Transaction>,
}
