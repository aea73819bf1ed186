mod common;

use std::cmp::Ordering;

use common::{key, mine, T0, ROUND};
use mifty_core::chain::{genesis, Address, Block, BlockBundle, Hash, KeyPair, Transaction, TxBody};
use mifty_core::consensus::*;
use mifty_core::puzzle::Move;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn block_at(ts: u64) -> Block {
    let mut b = genesis();
    b.number = 5;
    b.timestamp = ts;
    b
}

fn tx_at(ts: u64) -> Transaction {
    let k = key(1);
    TxBody::transfer(ts, k.address(), Address([2; 32]), 1, 0, Address([3; 32]))
        .sign(&k)
        .unwrap()
}

fn timing_names(r: Result<(), Vec<TimingViolation>>) -> Vec<String> {
    r.err()
        .unwrap_or_default()
        .iter()
        .map(|v| format!("{v:?}").split(' ').next().unwrap().to_string())
        .collect()
}

#[test]
fn block_timing_boundaries() {
    let prev = block_at(T0 - ROUND);
    // Minutes value divisible by ten.
    for (ts, ok) in [(T0, true), (T0 - 1, false), (T0 + 59_999, true), (T0 + 60_000, false)] {
        let r = validate_block_timing(&block_at(ts), &prev, ts, true);
        assert_eq!(!timing_names(r).contains(&"NotOnCompetitionBoundary".to_string()), ok, "ts {ts}");
    }
    assert!(timing_names(validate_block_timing(&block_at(28_333_341 * 60_000), &prev, 0, false))
        .contains(&"NotOnCompetitionBoundary".to_string()));

    // Strictly after the predecessor.
    let r = |prev_ts| timing_names(validate_block_timing(&block_at(T0), &block_at(prev_ts), T0, true));
    assert!(r(T0).contains(&"NotAfterPredecessor".to_string()));
    assert!(r(T0 + 1).contains(&"NotAfterPredecessor".to_string()));
    assert!(r(T0 - 1).is_empty());

    // Within [now - 5 min, now + 30 s].
    let at = |now| timing_names(validate_block_timing(&block_at(T0), &prev, now, true));
    assert!(at(T0 - 30_000).is_empty());
    assert!(at(T0 - 29_999).is_empty());
    assert_eq!(at(T0 - 30_001), vec!["TooFarAhead"]);
    assert_eq!(at(T0 - 31_000), vec!["TooFarAhead"]);
    assert!(at(T0 + 300_000).is_empty());
    assert!(at(T0 + 299_999).is_empty());
    assert_eq!(at(T0 + 300_001), vec!["TooOld"]);
    // Replay skips the arrival window only.
    assert!(validate_block_timing(&block_at(T0), &prev, T0 + 10 * ROUND, false).is_ok());
}

#[test]
fn tx_in_block_boundaries() {
    let block_ts = T0;
    let now = T0 + 1_000;
    let check = |ts, now| timing_names(validate_tx_in_block(&tx_at(ts), block_ts, now));
    assert!(check(block_ts - 2_400_000, now).is_empty());
    assert!(check(block_ts - 2_399_999, now).is_empty());
    assert_eq!(check(block_ts - 2_400_001, now), vec!["TxTooOldForBlock"]);
    assert_eq!(check(block_ts - 2_460_000, now), vec!["TxTooOldForBlock"]);
    assert!(check(now - 480_000, now).is_empty());
    assert!(check(now - 480_001, now).is_empty());
    assert_eq!(check(now - 479_999, now), vec!["TxTooRecent"]);
    assert_eq!(check(now - 60_000, now), vec!["TxTooRecent"]);
    assert!(validate_tx_in_block(&tx_at(T0 - 600_000), T0, T0 - 600_000 + 600_000).is_ok());
}

#[test]
fn tx_creation_boundaries() {
    let now = T0;
    let check = |ts| timing_names(validate_tx_creation(&tx_at(ts), now));
    assert!(check(now).is_empty());
    assert!(check(now + 30_000).is_empty());
    assert_eq!(check(now + 30_001), vec!["TxTooFarAhead"]);
    assert_eq!(check(now + 31_000), vec!["TxTooFarAhead"]);
    assert!(check(now - 3_600_000).is_empty());
    assert!(check(now - 3_599_999).is_empty());
    assert_eq!(check(now - 3_600_001), vec!["TxTooOld"]);
}

fn random_ctx(rng: &mut ChaCha8Rng) -> ChainContext {
    let mut c = ChainContext::genesis();
    c.block.number = 9;
    c.cumulative_tx_count = rng.gen_range(0..3);
    c.block.score = rng.gen_range(0..3);
    c.block.hash = Hash(rng.gen());
    c
}

/// A candidate beats every other one pairwise.
fn brute_force_optimal(candidates: &[ChainContext]) -> &ChainContext {
    candidates
        .iter()
        .find(|a| {
            candidates.iter().all(|b| {
                a.block.hash == b.block.hash
                    || (a.cumulative_tx_count, a.block.score) > (b.cumulative_tx_count, b.block.score)
                    || ((a.cumulative_tx_count, a.block.score) == (b.cumulative_tx_count, b.block.score)
                        && a.block.hash < b.block.hash)
            })
        })
        .unwrap()
}

#[test]
fn select_optimal_matches_brute_force_and_ignores_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..500 {
        let n = rng.gen_range(1..=8);
        let mut candidates: Vec<ChainContext> = (0..n).map(|_| random_ctx(&mut rng)).collect();
        let expected = brute_force_optimal(&candidates).block.hash;
        assert_eq!(select_optimal(&candidates).unwrap().block.hash, expected);
        candidates.shuffle(&mut rng);
        assert_eq!(select_optimal(&candidates).unwrap().block.hash, expected);
    }
}

proptest! {
    #[test]
    fn compare_is_a_strict_total_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_ctx(&mut rng), random_ctx(&mut rng), random_ctx(&mut rng));
        let ab = compare_blocks(&a, &b).unwrap();
        prop_assert_eq!(ab.reverse(), compare_blocks(&b, &a).unwrap());
        prop_assert_ne!(ab, Ordering::Equal);
        let bc = compare_blocks(&b, &c).unwrap();
        if ab == Ordering::Greater && bc == Ordering::Greater {
            prop_assert_eq!(compare_blocks(&a, &c).unwrap(), Ordering::Greater);
        }
    }
}

fn transfer(from: &KeyPair, to: Address, amount: u64, fee: u64, broker: Address, ts: u64) -> Transaction {
    TxBody::transfer(ts, from.address(), to, amount, fee, broker).sign(from).unwrap()
}

fn claim(solver: &KeyPair, block: &Block, fee: u64, broker: Address) -> Transaction {
    TxBody::reward_claim(block.timestamp, solver.address(), block.id, fee, broker)
        .sign(solver)
        .unwrap()
}

#[test]
fn ingest_advances_and_switches_head() {
    let alice = key(1);
    let bob = key(2);
    let mut store = ChainStore::new();
    let b1 = mine(&genesis(), &alice, T0, vec![], &[], 1);
    assert_eq!(
        store.ingest(b1.clone(), T0 + 100, IngestMode::Live),
        Ok(IngestOutcome::Accepted { head_changed: true })
    );
    assert_eq!(store.ingest(b1.clone(), T0 + 200, IngestMode::Live), Ok(IngestOutcome::Duplicate));

    // Competing block 2s: the one with the better puzzle score wins.
    let low = mine(&b1.block, &alice, T0 + ROUND, vec![], &[], 2);
    let mut best = None;
    for seed in 0..40u8 {
        let cand = mine(&b1.block, &bob, T0 + ROUND, vec![], &[Move::U, Move::L, Move::U, Move::L, Move::D], 100 + seed as u64);
        if cand.block.score > low.block.score {
            best = Some(cand);
            break;
        }
    }
    let high = best.expect("some move sequence raises the score");
    let now = T0 + ROUND + 50;
    assert!(store.ingest(low.clone(), now, IngestMode::Live).unwrap().head_changed());
    assert_eq!(store.head().block.hash, low.block.hash);
    assert!(store.ingest(high.clone(), now, IngestMode::Live).unwrap().head_changed());
    assert_eq!(store.head().block.hash, high.block.hash);
    assert_eq!(store.at_number(2).len(), 2);
}

#[test]
fn ingest_rejections() {
    let alice = key(1);
    let mut store = ChainStore::new();
    let b1 = mine(&genesis(), &alice, T0, vec![], &[], 1);
    let b2 = mine(&b1.block, &alice, T0 + ROUND, vec![], &[], 2);
    let rejection = store.ingest(b2.clone(), T0 + ROUND, IngestMode::Live).unwrap_err();
    assert_eq!(rejection.unknown_parent(), Some(1));

    // Too late for a live arrival, fine as a replay.
    let late = T0 + 300_001;
    assert!(store.ingest(b1.clone(), late, IngestMode::Live).is_err());
    assert!(store.ingest(b1, late, IngestMode::Replay).is_ok());
}

#[test]
fn rewards_and_transfers_through_the_store() {
    let alice = key(1);
    let bob = key(2);
    let carol = Address([3; 32]);
    let mut store = ChainStore::new();
    let mut parent = genesis();
    let mut chain = Vec::new();
    for i in 0..4u64 {
        let b = mine(&parent, &alice, T0 + i * ROUND, vec![], &[], i + 1);
        store.ingest(b.clone(), T0 + i * ROUND, IngestMode::Live).unwrap();
        parent = b.block.clone();
        chain.push(b.block);
    }
    // Block 5: claim for block 1 is four blocks away; for block 2 it is three.
    let ts5 = T0 + 4 * ROUND;
    let too_far = mine(&parent, &alice, ts5, vec![claim(&alice, &chain[0], 0, carol)], &[], 50);
    let r = store.ingest(too_far, ts5, IngestMode::Live).unwrap_err();
    assert!(matches!(r.0[0], RejectReason::Ledger(LedgerViolation::RewardTooFar { distance: 4, .. })));

    let ok = mine(&parent, &alice, ts5, vec![claim(&alice, &chain[1], 100, carol)], &[], 51);
    store.ingest(ok.clone(), ts5, IngestMode::Live).unwrap();
    let ledger = &store.head().ledger;
    assert_eq!(ledger.balance(&alice.address()), 4900);
    assert_eq!(ledger.balance(&carol), 100);
    assert!(ledger.is_conserved());

    // Block 6: double claim rejected; a transfer is applied.
    let ts6 = ts5 + ROUND;
    let twice = vec![claim(&alice, &chain[2], 0, carol), claim(&alice, &chain[2], 1, carol)];
    let dup = mine(&ok.block, &alice, ts6, twice, &[], 60);
    assert!(matches!(
        store.ingest(dup, ts6, IngestMode::Live).unwrap_err().0[0],
        RejectReason::Ledger(LedgerViolation::RewardAlreadyClaimed { .. })
    ));
    let pay = transfer(&alice, bob.address(), 1000, 10, carol, ts6 - 600_000);
    let b6 = mine(&ok.block, &alice, ts6, vec![pay], &[], 61);
    store.ingest(b6, ts6, IngestMode::Live).unwrap();
    let ledger = &store.head().ledger;
    assert_eq!(ledger.balance(&alice.address()), 3890);
    assert_eq!(ledger.balance(&bob.address()), 1000);
    assert_eq!(ledger.balance(&carol), 110);
    assert!(ledger.is_conserved());
    assert_eq!(store.head().cumulative_tx_count, 2);

    let overdraft = transfer(&bob, alice.address(), 1000, 1, carol, ts6);
    let b7 = mine(&store.head().block.clone(), &alice, ts6 + ROUND, vec![overdraft], &[], 70);
    assert!(matches!(
        store.ingest(b7, ts6 + ROUND, IngestMode::Live).unwrap_err().0[0],
        RejectReason::Ledger(LedgerViolation::Overdraft { .. })
    ));
}

#[test]
fn transaction_count_dominates_score() {
    let alice = key(1);
    let bob = key(2);
    let mut store = ChainStore::new();
    let b1 = mine(&genesis(), &alice, T0, vec![], &[], 1);
    store.ingest(b1.clone(), T0, IngestMode::Live).unwrap();
    let ts = T0 + ROUND;
    let with_claim = mine(&b1.block, &bob, ts, vec![claim(&alice, &b1.block, 0, bob.address())], &[], 2);
    let scored = mine(&b1.block, &alice, ts, vec![], &[Move::U, Move::L, Move::U], 3);
    store.ingest(with_claim.clone(), ts, IngestMode::Live).unwrap();
    store.ingest(scored, ts, IngestMode::Live).unwrap();
    assert_eq!(store.head().block.hash, with_claim.block.hash);
}

#[test]
fn heads_converge_regardless_of_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let keys: Vec<KeyPair> = (1..=4).map(key).collect();
    // A small tree: three rounds, each with competing blocks on every known tip.
    let mut bundles: Vec<BlockBundle> = Vec::new();
    let mut tips = vec![genesis()];
    for round in 0..3u64 {
        let mut next = Vec::new();
        for (t, tip) in tips.iter().enumerate() {
            for (k, solver) in keys.iter().enumerate().take(2) {
                let moves: Vec<Move> = (0..rng.gen_range(0..8)).map(|_| Move::ALL[rng.gen_range(0..4)]).collect();
                let b = mine(tip, solver, T0 + round * ROUND, vec![], &moves, round * 100 + t as u64 * 10 + k as u64);
                next.push(b.block.clone());
                bundles.push(b);
            }
        }
        tips = next;
    }
    let replay = |order: &[BlockBundle]| {
        let mut store = ChainStore::new();
        let mut pending: Vec<BlockBundle> = order.to_vec();
        while !pending.is_empty() {
            pending.retain(|b| store.ingest(b.clone(), 0, IngestMode::Replay).is_err());
        }
        store.head().block.hash
    };
    let expected = replay(&bundles);
    for _ in 0..5 {
        bundles.shuffle(&mut rng);
        assert_eq!(replay(&bundles), expected);
    }
}

#[test]
fn chain_log_round_trip() {
    let dir = std::env::temp_dir().join(format!("mifty-log-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("chain.jsonl");
    let _ = std::fs::remove_file(&path);
    let alice = key(1);
    let mut log = ChainLog::open(&path).unwrap();
    let mut parent = genesis();
    for i in 0..3u64 {
        let b = mine(&parent, &alice, T0 + i * ROUND, vec![], &[Move::L], i);
        log.append(&b).unwrap();
        parent = b.block;
    }
    let (store, skipped) = ChainLog::replay(&path, T0 + 3 * ROUND).unwrap();
    assert_eq!(skipped, 0);
    assert_eq!(store.head().block, parent);
    std::fs::remove_dir_all(dir).unwrap();
}
