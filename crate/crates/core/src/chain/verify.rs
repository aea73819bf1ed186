//! Stateless block verification. Timing rules live in `consensus`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::puzzle::{generate_puzzle, Score, MAX_MOVES};

use super::block::{genesis, Block, DEFAULT_MAGIC_CAP};
use super::tx::Transaction;
use super::types::Hash;

/// A named reason a block fails verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    HashMismatch { recorded: Hash, computed: Hash },
    StartPuzzleMismatch,
    StartPuzzleNotZero { score: Score },
    InvalidMagic { recorded: u64, minimal: Option<u64> },
    IllegalSolution { reason: String },
    EndPuzzleMismatch,
    ScoreMismatch { recorded: Score, computed: Score },
    NumberNotSequential { expected: u64, got: u64 },
    PrevHashMismatch,
    GenesisMismatch,
    MissingTransaction { id: Hash },
    DuplicateTransaction { id: Hash },
    TransactionHashMismatch { id: Hash },
    BadTransaction { id: Hash, reason: String },
    RewardFeeExceedsAmount { id: Hash },
}

impl Violation {
    /// Short stable name, used in CLI output and API errors.
    pub fn name(&self) -> &'static str {
        match self {
            Violation::HashMismatch { .. } => "HashMismatch",
            Violation::StartPuzzleMismatch => "StartPuzzleMismatch",
            Violation::StartPuzzleNotZero { .. } => "StartPuzzleNotZero",
            Violation::InvalidMagic { .. } => "InvalidMagic",
            Violation::IllegalSolution { .. } => "IllegalSolution",
            Violation::EndPuzzleMismatch => "EndPuzzleMismatch",
            Violation::ScoreMismatch { .. } => "ScoreMismatch",
            Violation::NumberNotSequential { .. } => "NumberNotSequential",
            Violation::PrevHashMismatch => "PrevHashMismatch",
            Violation::GenesisMismatch => "GenesisMismatch",
            Violation::MissingTransaction { .. } => "MissingTransaction",
            Violation::DuplicateTransaction { .. } => "DuplicateTransaction",
            Violation::TransactionHashMismatch { .. } => "TransactionHashMismatch",
            Violation::BadTransaction { .. } => "BadTransaction",
            Violation::RewardFeeExceedsAmount { .. } => "RewardFeeExceedsAmount",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::HashMismatch { recorded, computed } => {
                write!(f, "HashMismatch: recorded {recorded}, computed {computed}")
            }
            Violation::StartPuzzleNotZero { score } => write!(f, "StartPuzzleNotZero: score {score}"),
            Violation::InvalidMagic { recorded, minimal } => match minimal {
                Some(m) => write!(f, "InvalidMagic: recorded {recorded}, minimal {m}"),
                None => write!(f, "InvalidMagic: recorded {recorded} does not yield a zero-score puzzle"),
            },
            Violation::IllegalSolution { reason } => write!(f, "IllegalSolution: {reason}"),
            Violation::ScoreMismatch { recorded, computed } => {
                write!(f, "ScoreMismatch: recorded {recorded}, computed {computed}")
            }
            Violation::NumberNotSequential { expected, got } => {
                write!(f, "NumberNotSequential: expected {expected}, got {got}")
            }
            Violation::MissingTransaction { id }
            | Violation::DuplicateTransaction { id }
            | Violation::TransactionHashMismatch { id }
            | Violation::RewardFeeExceedsAmount { id } => write!(f, "{}: {id}", self.name()),
            Violation::BadTransaction { id, reason } => write!(f, "BadTransaction: {id}: {reason}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Checks a block against its own fields, its transactions and its
/// predecessor. `prev` may be `None` only for genesis or when linkage is
/// checked elsewhere.
///
/// Never aborts early: every failing check contributes a violation.
pub fn verify_block(block: &Block, transactions: &[Transaction], prev: Option<&Block>) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();

    if block.is_genesis() {
        if *block != genesis() {
            violations.push(Violation::GenesisMismatch);
        }
        return finish(violations);
    }

    let computed = block.recompute_hash();
    if computed != block.hash {
        violations.push(Violation::HashMismatch {
            recorded: block.hash,
            computed,
        });
    }

    let expected_start = generate_puzzle(&block.hash.0).expect("hash is 32 bytes");
    if block.start_puzzle != expected_start {
        violations.push(Violation::StartPuzzleMismatch);
    }
    let start_score = block.start_puzzle.score();
    if start_score != 0 {
        violations.push(Violation::StartPuzzleNotZero { score: start_score });
    }

    if let Some(v) = check_magic(block) {
        violations.push(v);
    }

    if block.solution.len() > MAX_MOVES {
        violations.push(Violation::IllegalSolution {
            reason: format!("{} moves exceeds {MAX_MOVES}", block.solution.len()),
        });
    } else {
        match block.start_puzzle.apply_solution(&block.solution) {
            Ok(end) => {
                if end != block.end_puzzle {
                    violations.push(Violation::EndPuzzleMismatch);
                }
            }
            Err(e) => violations.push(Violation::IllegalSolution { reason: e.to_string() }),
        }
    }

    let computed_score = block.end_puzzle.score();
    if computed_score != block.score {
        violations.push(Violation::ScoreMismatch {
            recorded: block.score,
            computed: computed_score,
        });
    }

    if let Some(prev) = prev {
        if block.number != prev.number + 1 {
            violations.push(Violation::NumberNotSequential {
                expected: prev.number + 1,
                got: block.number,
            });
        }
        if block.prev_hash != prev.hash {
            violations.push(Violation::PrevHashMismatch);
        }
    }

    check_transactions(block, transactions, &mut violations);
    finish(violations)
}

fn finish(violations: Vec<Violation>) -> Result<(), Vec<Violation>> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Re-runs the magic search on the block's own fields and compares.
fn check_magic(block: &Block) -> Option<Violation> {
    let cap = block.magic.min(DEFAULT_MAGIC_CAP);
    match block.template().find_magic(cap) {
        Ok(found) if found.magic == block.magic => None,
        Ok(found) => Some(Violation::InvalidMagic {
            recorded: block.magic,
            minimal: Some(found.magic),
        }),
        Err(_) => Some(Violation::InvalidMagic {
            recorded: block.magic,
            minimal: None,
        }),
    }
}

fn check_transactions(block: &Block, transactions: &[Transaction], violations: &mut Vec<Violation>) {
    let by_id: HashMap<Hash, &Transaction> = transactions.iter().map(|tx| (tx.id, tx)).collect();
    let mut seen = HashSet::new();
    for id in &block.tx_ids {
        if !seen.insert(*id) {
            violations.push(Violation::DuplicateTransaction { id: *id });
            continue;
        }
        let Some(tx) = by_id.get(id) else {
            violations.push(Violation::MissingTransaction { id: *id });
            continue;
        };
        if tx.body.hash() != *id {
            violations.push(Violation::TransactionHashMismatch { id: *id });
            continue;
        }
        if tx.is_reward_claim() && tx.body.fee > tx.body.amount {
            violations.push(Violation::RewardFeeExceedsAmount { id: *id });
        }
        if let Err(e) = tx.check_well_formed() {
            violations.push(Violation::BadTransaction {
                id: *id,
                reason: e.to_string(),
            });
        }
    }
}
