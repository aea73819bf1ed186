//! MiftyCoin node: the state machine, the deterministic network simulator,
//! the HTTP API and the live gossip service.

pub mod api;
pub mod mempool;
pub mod message;
pub mod node;
pub mod service;
pub mod sim;

pub use message::{Message, NodeId, Payload};
pub use node::{NodeConfig, NodeState, Outbound, RoundError, SubmissionError};
