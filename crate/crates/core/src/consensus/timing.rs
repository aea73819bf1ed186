//! Time windows for blocks and transactions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::{Block, Transaction};

/// Competitions start at every multiple of ten minutes.
pub const COMPETITION_INTERVAL_MS: u64 = 600_000;
/// How far ahead of the node clock a block or transaction may be.
pub const MAX_FUTURE_DRIFT_MS: u64 = 30_000;
/// How old a block may be when it first reaches a node.
pub const MAX_BLOCK_AGE_MS: u64 = 300_000;
/// Oldest a transaction may be relative to the block including it.
pub const MAX_TX_AGE_IN_BLOCK_MS: u64 = 2_400_000;
/// Youngest a transaction may be, relative to the node clock, to be included.
pub const MIN_TX_AGE_MS: u64 = 480_000;
/// Oldest a transaction may be when submitted for creation.
pub const MAX_TX_CREATION_AGE_MS: u64 = 3_600_000;

const MS_PER_MINUTE: u64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum TimingViolation {
    /// Block timestamp minutes are not a multiple of ten.
    NotOnCompetitionBoundary { timestamp: u64 },
    /// Block timestamp is not after its predecessor's.
    NotAfterPredecessor { timestamp: u64, prev: u64 },
    /// More than 30 s ahead of the node clock.
    TooFarAhead { timestamp: u64, now: u64 },
    /// More than five minutes behind the node clock.
    TooOld { timestamp: u64, now: u64 },
    /// Transaction older than 40 minutes before the block.
    TxTooOldForBlock { timestamp: u64, block: u64 },
    /// Transaction less than eight minutes old at validation.
    TxTooRecent { timestamp: u64, now: u64 },
    /// Transaction more than 30 s ahead at creation.
    TxTooFarAhead { timestamp: u64, now: u64 },
    /// Transaction more than 60 minutes old at creation.
    TxTooOld { timestamp: u64, now: u64 },
}

impl fmt::Display for TimingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Smallest competition time strictly after `now`.
pub fn next_competition_time(now: u64) -> u64 {
    (now / COMPETITION_INTERVAL_MS + 1) * COMPETITION_INTERVAL_MS
}

/// Latest competition time at or before `now`.
pub fn current_competition_time(now: u64) -> u64 {
    now - now % COMPETITION_INTERVAL_MS
}

fn collect(violations: Vec<TimingViolation>) -> Result<(), Vec<TimingViolation>> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Block timestamp rules. With `check_arrival` false the node-clock window
/// is skipped, as during chain-sync replay.
pub fn validate_block_timing(
    block: &Block,
    prev: &Block,
    now: u64,
    check_arrival: bool,
) -> Result<(), Vec<TimingViolation>> {
    let ts = block.timestamp;
    let mut out = Vec::new();
    if !(ts / MS_PER_MINUTE).is_multiple_of(10) {
        out.push(TimingViolation::NotOnCompetitionBoundary { timestamp: ts });
    }
    if ts <= prev.timestamp {
        out.push(TimingViolation::NotAfterPredecessor {
            timestamp: ts,
            prev: prev.timestamp,
        });
    }
    if check_arrival {
        if ts > now.saturating_add(MAX_FUTURE_DRIFT_MS) {
            out.push(TimingViolation::TooFarAhead { timestamp: ts, now });
        }
        if ts < now.saturating_sub(MAX_BLOCK_AGE_MS) {
            out.push(TimingViolation::TooOld { timestamp: ts, now });
        }
    }
    collect(out)
}

/// Windows for a transaction included in a block stamped `block_ts`.
pub fn validate_tx_in_block(tx: &Transaction, block_ts: u64, now: u64) -> Result<(), Vec<TimingViolation>> {
    let ts = tx.timestamp();
    let mut out = Vec::new();
    if ts < block_ts.saturating_sub(MAX_TX_AGE_IN_BLOCK_MS) {
        out.push(TimingViolation::TxTooOldForBlock {
            timestamp: ts,
            block: block_ts,
        });
    }
    if ts > now.saturating_sub(MIN_TX_AGE_MS) {
        out.push(TimingViolation::TxTooRecent { timestamp: ts, now });
    }
    collect(out)
}

/// Admission window for a newly created transaction.
pub fn validate_tx_creation(tx: &Transaction, now: u64) -> Result<(), Vec<TimingViolation>> {
    let ts = tx.timestamp();
    let mut out = Vec::new();
    if ts > now.saturating_add(MAX_FUTURE_DRIFT_MS) {
        out.push(TimingViolation::TxTooFarAhead { timestamp: ts, now });
    }
    if ts < now.saturating_sub(MAX_TX_CREATION_AGE_MS) {
        out.push(TimingViolation::TxTooOld { timestamp: ts, now });
    }
    collect(out)
}
