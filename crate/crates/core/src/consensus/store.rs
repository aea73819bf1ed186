use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::{verify_block, Block, BlockBundle, BlockId, Hash, Transaction, Violation};

use super::fork::{preference, ChainContext};
use super::ledger::{AncestorInfo, LedgerViolation};
use super::timing::{validate_block_timing, validate_tx_in_block, TimingViolation};

/// Whether a block arrives fresh or as part of a chain-sync replay.
/// Replay skips the arrival window, which only makes sense at first sight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestMode {
    Live,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RejectReason {
    UnknownParent { number: u64, prev_hash: Hash },
    Block(Violation),
    Timing(TimingViolation),
    Ledger(LedgerViolation),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::UnknownParent { number, prev_hash } => {
                write!(f, "UnknownParent: block {number} builds on unknown {prev_hash}")
            }
            RejectReason::Block(v) => v.fmt(f),
            RejectReason::Timing(v) => v.fmt(f),
            RejectReason::Ledger(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection(pub Vec<RejectReason>);

impl Rejection {
    pub fn unknown_parent(&self) -> Option<u64> {
        self.0.iter().find_map(|r| match r {
            RejectReason::UnknownParent { number, .. } => Some(number.saturating_sub(1)),
            _ => None,
        })
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for Rejection {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestOutcome {
    /// Stored; `head_changed` tells whether it moved the head.
    Accepted { head_changed: bool },
    /// Already known; nothing changed.
    Duplicate,
}

impl IngestOutcome {
    pub fn head_changed(&self) -> bool {
        matches!(self, IngestOutcome::Accepted { head_changed: true })
    }
}

/// Every validated block, indexed by hash, id and number, plus the head.
///
/// The head is the optimal block at the highest stored number; the chain is
/// the head's ancestor path.
#[derive(Debug, Clone)]
pub struct ChainStore {
    contexts: HashMap<Hash, ChainContext>,
    ids: HashMap<BlockId, Hash>,
    by_number: BTreeMap<u64, Vec<Hash>>,
    head: Hash,
}

impl Default for ChainStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ChainStore {
    pub fn new() -> Self {
        let genesis = ChainContext::genesis();
        let hash = genesis.block.hash;
        let mut store = ChainStore {
            contexts: HashMap::new(),
            ids: HashMap::new(),
            by_number: BTreeMap::new(),
            head: hash,
        };
        store.insert(genesis);
        store
    }

    fn insert(&mut self, ctx: ChainContext) {
        let hash = ctx.block.hash;
        self.ids.insert(ctx.block.id, hash);
        self.by_number.entry(ctx.block.number).or_default().push(hash);
        self.contexts.insert(hash, ctx);
    }

    pub fn head(&self) -> &ChainContext {
        &self.contexts[&self.head]
    }

    pub fn get(&self, hash: &Hash) -> Option<&ChainContext> {
        self.contexts.get(hash)
    }

    pub fn get_by_id(&self, id: &BlockId) -> Option<&ChainContext> {
        self.ids.get(id).and_then(|h| self.contexts.get(h))
    }

    pub fn contains(&self, hash: &Hash) -> bool {
        self.contexts.contains_key(hash)
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// All stored contexts with this number, in insertion order.
    pub fn at_number(&self, number: u64) -> Vec<&ChainContext> {
        self.by_number
            .get(&number)
            .map(|hashes| hashes.iter().map(|h| &self.contexts[h]).collect())
            .unwrap_or_default()
    }

    /// Ancestor path of `tip`, from `tip` back to genesis.
    pub fn ancestors<'a>(&'a self, tip: &Hash) -> impl Iterator<Item = &'a ChainContext> + 'a {
        let mut next = self.contexts.get(tip);
        std::iter::from_fn(move || {
            let current = next?;
            next = if current.block.is_genesis() {
                None
            } else {
                self.contexts.get(&current.block.prev_hash)
            };
            Some(current)
        })
    }

    /// The head chain from `from` up to the head, ascending by number.
    pub fn chain_from(&self, from: u64) -> Vec<&ChainContext> {
        let mut chain: Vec<_> = self
            .ancestors(&self.head)
            .take_while(|c| c.block.number >= from)
            .collect();
        chain.reverse();
        chain
    }

    /// Head-chain block with this number.
    pub fn block_at(&self, number: u64) -> Option<&ChainContext> {
        self.ancestors(&self.head).find(|c| c.block.number == number)
    }

    fn recompute_head(&mut self) -> bool {
        let Some((_, hashes)) = self.by_number.iter().next_back() else {
            return false;
        };
        let best = hashes
            .iter()
            .map(|h| &self.contexts[h])
            .max_by(|a, b| preference(a, b))
            .map(|c| c.block.hash)
            .expect("by_number entries are non-empty");
        let changed = best != self.head;
        self.head = best;
        changed
    }

    /// Validates a block against its parent and, if sound, stores it and
    /// recomputes the head.
    pub fn ingest(&mut self, bundle: BlockBundle, now: u64, mode: IngestMode) -> Result<IngestOutcome, Rejection> {
        let BlockBundle { block, transactions } = bundle;
        if self.contexts.contains_key(&block.hash) || self.ids.contains_key(&block.id) {
            return Ok(IngestOutcome::Duplicate);
        }
        let Some(parent) = self.contexts.get(&block.prev_hash).filter(|_| !block.is_genesis()) else {
            return Err(Rejection(vec![RejectReason::UnknownParent {
                number: block.number,
                prev_hash: block.prev_hash,
            }]));
        };

        let mut reasons: Vec<RejectReason> = Vec::new();
        if let Err(vs) = verify_block(&block, &transactions, Some(&parent.block)) {
            reasons.extend(vs.into_iter().map(RejectReason::Block));
        }
        if let Err(vs) = validate_block_timing(&block, &parent.block, now, mode == IngestMode::Live) {
            reasons.extend(vs.into_iter().map(RejectReason::Timing));
        }
        let ordered = order_transactions(&block, &transactions);
        for tx in &ordered {
            if let Err(vs) = validate_tx_in_block(tx, block.timestamp, now) {
                reasons.extend(vs.into_iter().map(RejectReason::Timing));
            }
        }
        if !reasons.is_empty() {
            return Err(Rejection(reasons));
        }

        let lookup = |id: &BlockId| {
            self.ancestors(&parent.block.hash)
                .find(|c| c.block.id == *id)
                .map(|c| AncestorInfo {
                    number: c.block.number,
                    solver: c.block.solver,
                })
        };
        let ledger = parent
            .ledger
            .apply_block(&block, &ordered, &lookup)
            .map_err(|vs| Rejection(vs.into_iter().map(RejectReason::Ledger).collect()))?;

        let ctx = ChainContext {
            cumulative_tx_count: parent.cumulative_tx_count + block.tx_ids.len() as u64,
            transactions: ordered,
            block,
            ledger,
        };
        self.insert(ctx);
        Ok(IngestOutcome::Accepted {
            head_changed: self.recompute_head(),
        })
    }
}

fn order_transactions(block: &Block, transactions: &[Transaction]) -> Vec<Transaction> {
    let by_id: HashMap<Hash, &Transaction> = transactions.iter().map(|t| (t.id, t)).collect();
    block
        .tx_ids
        .iter()
        .filter_map(|id| by_id.get(id).map(|t| (*t).clone()))
        .collect()
}
