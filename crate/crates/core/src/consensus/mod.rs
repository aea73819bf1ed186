//! Timing rules, fork choice, the ledger and the chain store.

mod clock;
mod fork;
mod ledger;
mod persist;
mod store;
mod timing;

use thiserror::Error;

pub use clock::{ManualClock, NodeClock, SystemClock};
pub use fork::{compare_blocks, select_optimal, ChainContext};
pub use ledger::{AncestorInfo, Ledger, LedgerViolation, REWARD_CLAIM_WINDOW};
pub use persist::ChainLog;
pub use store::{ChainStore, IngestMode, IngestOutcome, RejectReason, Rejection};
pub use timing::{
    current_competition_time, next_competition_time, validate_block_timing, validate_tx_creation,
    validate_tx_in_block, TimingViolation, COMPETITION_INTERVAL_MS, MAX_BLOCK_AGE_MS, MAX_FUTURE_DRIFT_MS,
    MAX_TX_AGE_IN_BLOCK_MS, MAX_TX_CREATION_AGE_MS, MIN_TX_AGE_MS,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsensusError {
    #[error("cannot compare blocks {a} and {b}: numbers differ")]
    NumberMismatch { a: u64, b: u64 },
    #[error("no candidates to choose from")]
    EmptyCandidateSet,
}
