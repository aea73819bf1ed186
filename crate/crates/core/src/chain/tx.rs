use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::keys::{verify_signature, KeyPair};
use super::types::{Address, BlockId, Hash, PublicKey, Signature};
use super::{ChainError, REWARD_AMOUNT};

/// Who pays for a transaction: an account, or the system for reward claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sender {
    System,
    Account(Address),
}

impl Sender {
    const SYSTEM_TAG: &'static str = "SYSTEM";

    fn render(&self) -> String {
        match self {
            Sender::System => Self::SYSTEM_TAG.to_string(),
            Sender::Account(a) => a.to_hex(),
        }
    }
}

impl fmt::Display for Sender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Serialize for Sender {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for Sender {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        if text == Sender::SYSTEM_TAG {
            Ok(Sender::System)
        } else {
            Address::from_hex(&text)
                .map(Sender::Account)
                .map_err(serde::de::Error::custom)
        }
    }
}

/// The hashed part of a transaction: everything but id, key and signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxBody {
    pub timestamp: u64,
    pub sender: Sender,
    pub recipient: Address,
    pub amount: u64,
    pub fee: u64,
    pub broker: Address,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_block_id: Option<BlockId>,
}

impl TxBody {
    pub fn transfer(timestamp: u64, sender: Address, recipient: Address, amount: u64, fee: u64, broker: Address) -> Self {
        TxBody {
            timestamp,
            sender: Sender::Account(sender),
            recipient,
            amount,
            fee,
            broker,
            reward_block_id: None,
        }
    }

    /// A claim for the fixed block reward, paid by the system to `solver`.
    pub fn reward_claim(timestamp: u64, solver: Address, block: BlockId, fee: u64, broker: Address) -> Self {
        TxBody {
            timestamp,
            sender: Sender::System,
            recipient: solver,
            amount: REWARD_AMOUNT,
            fee,
            broker,
            reward_block_id: Some(block),
        }
    }

    pub fn is_reward_claim(&self) -> bool {
        self.sender == Sender::System
    }

    /// Timestamp, sender, recipient, amount, fee, broker and reward block,
    /// concatenated as text without separators.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut text = String::with_capacity(256);
        text.push_str(&self.timestamp.to_string());
        text.push_str(&self.sender.render());
        text.push_str(&self.recipient.to_hex());
        text.push_str(&self.amount.to_string());
        text.push_str(&self.fee.to_string());
        text.push_str(&self.broker.to_hex());
        if let Some(id) = &self.reward_block_id {
            text.push_str(&id.to_hex());
        }
        text.into_bytes()
    }

    pub fn hash(&self) -> Hash {
        Hash::digest(&self.canonical_bytes())
    }

    /// The account whose key must sign: the sender, or the recipient of a reward claim.
    pub fn signer(&self) -> Address {
        match self.sender {
            Sender::Account(a) => a,
            Sender::System => self.recipient,
        }
    }

    pub fn sign(self, key: &KeyPair) -> Result<Transaction, ChainError> {
        if key.address() != self.signer() {
            return Err(ChainError::UnknownKey);
        }
        let id = self.hash();
        let signature = key.sign(&id.0);
        Ok(Transaction {
            id,
            body: self,
            public_key: key.public_key(),
            signature,
        })
    }
}

/// A signed transaction.
///
/// The public key travels with the transaction; it must hash to the
/// signer's address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: Hash,
    #[serde(flatten)]
    pub body: TxBody,
    pub public_key: PublicKey,
    pub signature: Signature,
}

impl Transaction {
    pub fn timestamp(&self) -> u64 {
        self.body.timestamp
    }

    pub fn is_reward_claim(&self) -> bool {
        self.body.is_reward_claim()
    }

    pub fn check_signature(&self) -> Result<(), ChainError> {
        if self.public_key.address() != self.body.signer() {
            return Err(ChainError::UnknownKey);
        }
        if !verify_signature(&self.public_key, &self.body.hash().0, &self.signature) {
            return Err(ChainError::BadSignature);
        }
        Ok(())
    }

    pub fn verify_signature(&self) -> bool {
        self.check_signature().is_ok()
    }

    /// Structural checks that do not need chain state.
    pub fn check_well_formed(&self) -> Result<(), ChainError> {
        if self.id != self.body.hash() {
            return Err(ChainError::MalformedField("transaction id does not match its hash".into()));
        }
        let claim = self.body.is_reward_claim();
        if claim != self.body.reward_block_id.is_some() {
            return Err(ChainError::MalformedField(
                "reward_block_id must be present exactly for SYSTEM claims".into(),
            ));
        }
        if claim && self.body.amount != REWARD_AMOUNT {
            return Err(ChainError::MalformedField(format!(
                "reward claims must carry {REWARD_AMOUNT}"
            )));
        }
        if claim && self.body.fee > self.body.amount {
            return Err(ChainError::MalformedField("reward fee exceeds reward".into()));
        }
        self.check_signature()
    }
}
