//! Blocks, transactions, hashing, magic-number search, signatures and
//! stateless block verification.

mod block;
mod keys;
mod tx;
mod types;
mod verify;

use thiserror::Error;

use crate::puzzle::PuzzleError;

pub use block::{genesis, Block, BlockBundle, BlockTemplate, MagicSearch, DEFAULT_MAGIC_CAP};
pub use keys::{verify_signature, KeyPair};
pub use tx::{Sender, Transaction, TxBody};
pub use types::{Address, BlockId, Hash, PublicKey, Signature};
pub use verify::{verify_block, Violation};

/// Block reward in mift-cents (MFT$50).
pub const REWARD_AMOUNT: u64 = 5000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("malformed field: {0}")]
    MalformedField(String),
    #[error("no zero-score puzzle found with magic up to {0}")]
    SearchBudgetExceeded(u64),
    #[error("key does not belong to the signing account")]
    UnknownKey,
    #[error("signature does not verify")]
    BadSignature,
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
}
