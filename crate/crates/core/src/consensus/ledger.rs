//! Account balances in mift-cents.
//!
//! Money only enters through reward claims, and every transfer moves value
//! between accounts, so the total held always equals the reward amount
//! times the number of claimed blocks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::{Address, Block, BlockId, Hash, Sender, Transaction, REWARD_AMOUNT};

/// Inclusive limit on how many blocks after block A its reward may be claimed.
pub const REWARD_CLAIM_WINDOW: u64 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum LedgerViolation {
    Overdraft { tx: Hash, account: Address },
    RewardTooFar { tx: Hash, distance: u64 },
    RewardAlreadyClaimed { tx: Hash, block: BlockId },
    RewardWrongSolver { tx: Hash },
    RewardUnknownBlock { tx: Hash, block: BlockId },
    TransactionReplayed { tx: Hash },
}

impl fmt::Display for LedgerViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Minimal facts about an ancestor block needed to settle reward claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AncestorInfo {
    pub number: u64,
    pub solver: Address,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    balances: BTreeMap<Address, u64>,
    claimed_rewards: BTreeSet<BlockId>,
    #[serde(skip)]
    applied: BTreeSet<Hash>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn balance(&self, account: &Address) -> u64 {
        self.balances.get(account).copied().unwrap_or(0)
    }

    pub fn balances(&self) -> &BTreeMap<Address, u64> {
        &self.balances
    }

    pub fn claimed_rewards(&self) -> &BTreeSet<BlockId> {
        &self.claimed_rewards
    }

    pub fn is_claimed(&self, block: &BlockId) -> bool {
        self.claimed_rewards.contains(block)
    }

    pub fn contains_tx(&self, id: &Hash) -> bool {
        self.applied.contains(id)
    }

    pub fn total(&self) -> u64 {
        self.balances.values().sum()
    }

    /// Σ balances = reward × claimed blocks.
    pub fn is_conserved(&self) -> bool {
        self.total() == REWARD_AMOUNT * self.claimed_rewards.len() as u64
    }

    fn credit(&mut self, account: Address, amount: u64) {
        if amount > 0 {
            *self.balances.entry(account).or_insert(0) += amount;
        }
    }

    /// Applies one transaction included in a block numbered `block_number`.
    ///
    /// `ancestor` resolves block ids on the including block's chain.
    pub fn apply_tx(
        &mut self,
        tx: &Transaction,
        block_number: u64,
        ancestor: &dyn Fn(&BlockId) -> Option<AncestorInfo>,
    ) -> Result<(), LedgerViolation> {
        if self.applied.contains(&tx.id) {
            return Err(LedgerViolation::TransactionReplayed { tx: tx.id });
        }
        let body = &tx.body;
        match body.sender {
            Sender::Account(from) => {
                let debit = body
                    .amount
                    .checked_add(body.fee)
                    .filter(|d| *d <= self.balance(&from))
                    .ok_or(LedgerViolation::Overdraft { tx: tx.id, account: from })?;
                let remaining = self.balance(&from) - debit;
                if remaining == 0 {
                    self.balances.remove(&from);
                } else {
                    self.balances.insert(from, remaining);
                }
                self.credit(body.recipient, body.amount);
                self.credit(body.broker, body.fee);
            }
            Sender::System => {
                let block = body
                    .reward_block_id
                    .ok_or(LedgerViolation::RewardWrongSolver { tx: tx.id })?;
                let info = ancestor(&block).ok_or(LedgerViolation::RewardUnknownBlock { tx: tx.id, block })?;
                let distance = block_number.saturating_sub(info.number);
                if distance == 0 || distance > REWARD_CLAIM_WINDOW {
                    return Err(LedgerViolation::RewardTooFar { tx: tx.id, distance });
                }
                if info.solver != body.recipient {
                    return Err(LedgerViolation::RewardWrongSolver { tx: tx.id });
                }
                if self.claimed_rewards.contains(&block) {
                    return Err(LedgerViolation::RewardAlreadyClaimed { tx: tx.id, block });
                }
                let fee = body.fee.min(REWARD_AMOUNT);
                self.claimed_rewards.insert(block);
                self.credit(body.recipient, REWARD_AMOUNT - fee);
                self.credit(body.broker, fee);
            }
        }
        self.applied.insert(tx.id);
        Ok(())
    }

    /// Applies a block's transactions in order, returning the new ledger or
    /// every violation found.
    pub fn apply_block(
        &self,
        block: &Block,
        transactions: &[Transaction],
        ancestor: &dyn Fn(&BlockId) -> Option<AncestorInfo>,
    ) -> Result<Ledger, Vec<LedgerViolation>> {
        let mut next = self.clone();
        let mut violations = Vec::new();
        for tx in transactions {
            if let Err(v) = next.apply_tx(tx, block.number, ancestor) {
                violations.push(v);
            }
        }
        if violations.is_empty() {
            Ok(next)
        } else {
            Err(violations)
        }
    }
}
