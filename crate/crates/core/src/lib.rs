//! Core model of the MiftyCoin network: hash-generated tile puzzles, block
//! and transaction records, the consensus rules, and machine solvers.

pub mod chain;
pub mod consensus;
pub mod puzzle;
pub mod solver;
