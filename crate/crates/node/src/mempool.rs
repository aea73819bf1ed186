use std::collections::BTreeMap;

use mifty_core::chain::{Hash, Transaction};
use mifty_core::consensus::{validate_tx_creation, Ledger, TimingViolation, MAX_TX_AGE_IN_BLOCK_MS};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", content = "detail")]
pub enum AdmissionError {
    #[error("malformed transaction: {0}")]
    Malformed(String),
    #[error("timestamp outside the creation window: {0:?}")]
    Timing(Vec<TimingViolation>),
    #[error("fee {fee} below node minimum {minimum}")]
    FeeTooLow { fee: u64, minimum: u64 },
    #[error("transaction already known")]
    Duplicate,
}

impl AdmissionError {
    pub fn name(&self) -> &'static str {
        match self {
            AdmissionError::Malformed(_) => "MalformedTransaction",
            AdmissionError::Timing(_) => "TimestampOutOfWindow",
            AdmissionError::FeeTooLow { .. } => "FeeTooLow",
            AdmissionError::Duplicate => "DuplicateTransaction",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MempoolEntry {
    pub tx: Transaction,
    pub arrived_at: u64,
}

/// Pending transactions keyed by id.
#[derive(Debug, Clone, Default)]
pub struct Mempool {
    entries: BTreeMap<Hash, MempoolEntry>,
    min_fee: u64,
}

impl Mempool {
    pub fn new(min_fee: u64) -> Self {
        Mempool {
            entries: BTreeMap::new(),
            min_fee,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &Hash) -> bool {
        self.entries.contains_key(id)
    }

    /// Admits a transaction that passes the creation window and structural checks.
    pub fn admit(&mut self, tx: Transaction, now: u64) -> Result<(), AdmissionError> {
        if self.entries.contains_key(&tx.id) {
            return Err(AdmissionError::Duplicate);
        }
        tx.check_well_formed()
            .map_err(|e| AdmissionError::Malformed(e.to_string()))?;
        validate_tx_creation(&tx, now).map_err(AdmissionError::Timing)?;
        if !tx.is_reward_claim() && tx.body.fee < self.min_fee {
            return Err(AdmissionError::FeeTooLow {
                fee: tx.body.fee,
                minimum: self.min_fee,
            });
        }
        self.entries.insert(tx.id, MempoolEntry { tx, arrived_at: now });
        Ok(())
    }

    /// Pending transactions ordered by timestamp, then id.
    pub fn ordered(&self) -> Vec<&Transaction> {
        let mut txs: Vec<&Transaction> = self.entries.values().map(|e| &e.tx).collect();
        txs.sort_by_key(|t| (t.timestamp(), t.id));
        txs
    }

    /// Drops transactions already applied on the head chain and those too
    /// old to be included in any block from `now` on.
    pub fn prune(&mut self, head_ledger: &Ledger, now: u64) {
        let oldest = now.saturating_sub(MAX_TX_AGE_IN_BLOCK_MS);
        self.entries
            .retain(|id, e| !head_ledger.contains_tx(id) && e.tx.timestamp() >= oldest);
    }
}
