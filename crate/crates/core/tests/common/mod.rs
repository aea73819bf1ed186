#![allow(dead_code)]

use mifty_core::chain::{Block, BlockBundle, BlockId, BlockTemplate, KeyPair, Transaction, DEFAULT_MAGIC_CAP};
use mifty_core::puzzle::{Move, Solution};
use sha2::{Digest, Sha256};

pub const T0: u64 = 1_700_000_400_000;
pub const ROUND: u64 = 600_000;

/// Naive pairwise scorer written straight from the perimeter layout,
/// independent of `Tile::{top,right,bottom,left}` and `score_cells`.
pub fn naive_score(cells: &[Option<u8>], width: usize) -> u32 {
    let bit = |b: u8, i: usize| (b >> (7 - i)) & 1;
    let right = |b: u8| [bit(b, 2), bit(b, 3), bit(b, 4)];
    let left = |b: u8| [bit(b, 0), bit(b, 7), bit(b, 6)];
    let top = |b: u8| [bit(b, 0), bit(b, 1), bit(b, 2)];
    let bottom = |b: u8| [bit(b, 6), bit(b, 5), bit(b, 4)];
    let mut total = 0;
    for i in 0..cells.len() {
        for j in 0..cells.len() {
            let (Some(a), Some(b)) = (cells[i], cells[j]) else { continue };
            let (ri, ci, rj, cj) = (i / width, i % width, j / width, j % width);
            if ri == rj && cj == ci + 1 && right(a) == left(b) {
                total += 1;
            }
            if ci == cj && rj == ri + 1 && bottom(a) == top(b) {
                total += 1;
            }
        }
    }
    total
}

/// Independent magic oracle: raw SHA-256 of the text preimage, naive scorer.
pub fn oracle_score_at(template: &BlockTemplate, magic: u64) -> u32 {
    let mut text = format!("{}{}{}", template.number, template.timestamp, magic);
    text.push_str(&hex::encode(template.prev_hash.0));
    text.push_str(&hex::encode(template.solver.0));
    for id in &template.tx_ids {
        text.push_str(&hex::encode(id.0));
    }
    let digest: [u8; 32] = Sha256::digest(text.as_bytes()).into();
    let mut cells: Vec<Option<u8>> = digest[..24].iter().map(|b| Some(*b)).collect();
    cells.push(None);
    naive_score(&cells, 5)
}

pub fn key(seed: u8) -> KeyPair {
    KeyPair::from_secret([seed; 32])
}

/// Builds an honest block on `parent` with the given moves (truncated at
/// the first illegal one).
pub fn mine(parent: &Block, solver: &KeyPair, timestamp: u64, txs: Vec<Transaction>, moves: &[Move], id_seed: u64) -> BlockBundle {
    let template = BlockTemplate {
        number: parent.number + 1,
        timestamp,
        prev_hash: parent.hash,
        solver: solver.address(),
        tx_ids: txs.iter().map(|t| t.id).collect(),
    };
    let search = template.find_magic(DEFAULT_MAGIC_CAP).unwrap();
    let mut legal = Vec::new();
    let mut current = search.start_puzzle.clone();
    for mv in moves {
        if let Ok(next) = current.apply_move(*mv) {
            current = next;
            legal.push(*mv);
        }
    }
    let mut id = [0u8; 32];
    id[..8].copy_from_slice(&id_seed.to_be_bytes());
    id[8..16].copy_from_slice(&timestamp.to_be_bytes());
    id[16] = solver.address().0[0];
    let block = Block::finalize(BlockId(id), template, search, Solution::new(legal).unwrap()).unwrap();
    BlockBundle { block, transactions: txs }
}
