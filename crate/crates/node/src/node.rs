//! The node state machine.
//!
//! Everything a node does goes through [`NodeState`]: competition timer
//! ticks, gossip messages and API requests. Callers serialize access and
//! supply the current time, so the same code runs under the simulator's
//! virtual clock and the live service's wall clock.

use std::collections::{HashMap, HashSet};

use mifty_core::chain::{
    Address, Block, BlockBundle, BlockId, BlockTemplate, Hash, KeyPair, MagicSearch, Transaction, TxBody,
    DEFAULT_MAGIC_CAP,
};
use mifty_core::consensus::{
    validate_tx_in_block, AncestorInfo, ChainContext, ChainLog, ChainStore, IngestMode, IngestOutcome, Ledger,
    Rejection, COMPETITION_INTERVAL_MS, MAX_BLOCK_AGE_MS, REWARD_CLAIM_WINDOW,
};
use mifty_core::puzzle::{Puzzle, Score, Solution};
use mifty_core::solver::{beam_solve, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, warn};

use crate::mempool::{AdmissionError, Mempool};
use crate::message::{Message, NodeId, Payload};

/// Orphans held while waiting for their parents.
const MAX_ORPHANS: usize = 256;
/// How long an outstanding chain request blocks mining.
const SYNC_PATIENCE_MS: u64 = 60_000;

#[derive(Debug, Clone)]
pub struct NodeConfig {
    pub id: NodeId,
    pub solver: SolverConfig,
    /// Whether the node enters its own machine solution each round.
    pub machine_mining: bool,
    pub min_fee: u64,
    /// Seeds the generator for block ids, together with the node address.
    pub seed: u64,
}

impl NodeConfig {
    pub fn new(id: NodeId) -> Self {
        NodeConfig {
            id,
            solver: SolverConfig::default(),
            machine_mining: true,
            min_fee: 0,
            seed: 0,
        }
    }
}

/// Where a node sends a message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outbound {
    Broadcast { message: Message, except: Option<NodeId> },
    Send { to: NodeId, message: Message },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoundError {
    #[error("competition time {0} is not a multiple of ten minutes")]
    NotCompetitionTime(u64),
    #[error("skipped round: chain head is not known yet")]
    SkippedRound,
    #[error("a round at or after {0} is already open")]
    StaleRound(u64),
    #[error("own block rejected: {0}")]
    OwnBlockRejected(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", content = "detail")]
pub enum SubmissionError {
    #[error("no open competition for that block number")]
    NoOpenCompetition,
    #[error("no puzzle was issued to this address in the current round")]
    UnknownSolverDraft,
    #[error("illegal solution: {0}")]
    IllegalSolution(String),
    #[error("the submission deadline has passed")]
    TooLate,
    #[error("score {score} does not beat the earlier submission scoring {best}")]
    NotImproved { score: Score, best: Score },
    #[error("block rejected: {0}")]
    BlockRejected(String),
}

impl SubmissionError {
    pub fn name(&self) -> &'static str {
        match self {
            SubmissionError::NoOpenCompetition => "NoOpenCompetition",
            SubmissionError::UnknownSolverDraft => "UnknownSolverDraft",
            SubmissionError::IllegalSolution(_) => "IllegalSolution",
            SubmissionError::TooLate => "TooLate",
            SubmissionError::NotImproved { .. } => "NotImproved",
            SubmissionError::BlockRejected(_) => "BlockRejected",
        }
    }
}

/// The puzzle handed to one solver address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuzzleView {
    pub number: u64,
    pub competition_ts: u64,
    pub deadline: u64,
    pub puzzle: Puzzle,
    pub prev_hash: Hash,
    pub magic: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionReceipt {
    pub number: u64,
    pub block_id: BlockId,
    pub hash: Hash,
    pub score: Score,
    pub head_changed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeStats {
    pub blocks_accepted: u64,
    pub blocks_rejected: u64,
    pub txs_admitted: u64,
    pub txs_rejected: u64,
    pub rounds_mined: u64,
    pub rounds_skipped: u64,
}

#[derive(Debug, Clone)]
struct Draft {
    template: BlockTemplate,
    search: MagicSearch,
}

/// The competition currently open: the next block number, its timestamp,
/// the parent and the transactions every draft shares.
#[derive(Debug, Clone)]
struct Round {
    number: u64,
    timestamp: u64,
    prev_hash: Hash,
    transactions: Vec<Transaction>,
    drafts: HashMap<Address, Draft>,
    best: HashMap<Address, Score>,
}

impl Round {
    fn deadline(&self) -> u64 {
        self.timestamp + MAX_BLOCK_AGE_MS
    }

    fn draft_for(&mut self, solver: Address) -> &Draft {
        let (number, timestamp, prev_hash) = (self.number, self.timestamp, self.prev_hash);
        let tx_ids: Vec<Hash> = self.transactions.iter().map(|t| t.id).collect();
        self.drafts.entry(solver).or_insert_with(|| {
            let template = BlockTemplate {
                number,
                timestamp,
                prev_hash,
                solver,
                tx_ids,
            };
            let search = template
                .find_magic(DEFAULT_MAGIC_CAP)
                .expect("a zero-score start puzzle exists far below the search cap");
            Draft { template, search }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundInfo {
    pub number: u64,
    pub competition_ts: u64,
    pub deadline: u64,
    pub transactions: usize,
}

fn id_rng(seed: u64, address: &Address) -> ChaCha8Rng {
    let mut material = seed.to_be_bytes().to_vec();
    material.extend_from_slice(&address.0);
    ChaCha8Rng::from_seed(Hash::digest(&material).0)
}

pub struct NodeState {
    config: NodeConfig,
    keys: KeyPair,
    store: ChainStore,
    mempool: Mempool,
    rng: ChaCha8Rng,
    seen: HashSet<Hash>,
    orphans: HashMap<Hash, Vec<(BlockBundle, u64)>>,
    orphan_count: usize,
    sync_requested_at: Option<u64>,
    round: Option<Round>,
    log: Option<ChainLog>,
    stats: NodeStats,
}

impl NodeState {
    pub fn new(config: NodeConfig, keys: KeyPair) -> Self {
        Self::with_store(config, keys, ChainStore::new())
    }

    /// Starts from an existing store, such as one replayed from disk.
    pub fn with_store(config: NodeConfig, keys: KeyPair, store: ChainStore) -> Self {
        let mut seen = HashSet::new();
        for ctx in store.chain_from(0) {
            seen.insert(ctx.block.hash);
        }
        NodeState {
            rng: id_rng(config.seed, &keys.address()),
            mempool: Mempool::new(config.min_fee),
            config,
            keys,
            store,
            seen,
            orphans: HashMap::new(),
            orphan_count: 0,
            sync_requested_at: None,
            round: None,
            log: None,
            stats: NodeStats::default(),
        }
    }

    /// Appends every block accepted from now on to `log`.
    pub fn attach_log(&mut self, log: ChainLog) {
        self.log = Some(log);
    }

    pub fn id(&self) -> &NodeId {
        &self.config.id
    }

    pub fn address(&self) -> Address {
        self.keys.address()
    }

    pub fn keys(&self) -> &KeyPair {
        &self.keys
    }

    pub fn store(&self) -> &ChainStore {
        &self.store
    }

    pub fn head(&self) -> &ChainContext {
        self.store.head()
    }

    pub fn ledger(&self) -> &Ledger {
        &self.store.head().ledger
    }

    pub fn mempool(&self) -> &Mempool {
        &self.mempool
    }

    pub fn stats(&self) -> &NodeStats {
        &self.stats
    }

    pub fn is_syncing(&self) -> bool {
        self.sync_requested_at.is_some()
    }

    pub fn round(&self) -> Option<RoundInfo> {
        self.round.as_ref().map(|r| RoundInfo {
            number: r.number,
            competition_ts: r.timestamp,
            deadline: r.deadline(),
            transactions: r.transactions.len(),
        })
    }

    fn message(&self, payload: Payload) -> Message {
        Message::new(self.config.id.clone(), payload)
    }

    /// Opens the competition at `competition_ts` on top of the current head
    /// and, if machine mining is on, mines and announces this node's block.
    pub fn mining_round(&mut self, competition_ts: u64, now: u64) -> Result<Vec<Outbound>, RoundError> {
        if !competition_ts.is_multiple_of(COMPETITION_INTERVAL_MS) {
            return Err(RoundError::NotCompetitionTime(competition_ts));
        }
        if let Some(round) = &self.round {
            if round.timestamp >= competition_ts {
                return Err(RoundError::StaleRound(round.timestamp));
            }
        }
        if let Some(asked) = self.sync_requested_at {
            if now.saturating_sub(asked) < SYNC_PATIENCE_MS {
                self.round = None;
                self.stats.rounds_skipped += 1;
                return Err(RoundError::SkippedRound);
            }
            self.sync_requested_at = None;
        }
        let base = self.round_base(competition_ts);
        let base_ledger = self.store.get(&base).expect("base is a stored block").ledger.clone();
        self.mempool.prune(&base_ledger, competition_ts);
        let mut out = Vec::new();
        for claim in self.own_reward_claims(&base) {
            if self.seen.insert(claim.id) && self.mempool.admit(claim.clone(), now).is_ok() {
                out.push(Outbound::Broadcast {
                    message: self.message(Payload::NewTransaction(claim)),
                    except: None,
                });
            }
        }
        let transactions = self.select_transactions(&base, competition_ts, now);
        let parent = &self.store.get(&base).expect("base is a stored block").block;
        self.round = Some(Round {
            number: parent.number + 1,
            timestamp: competition_ts,
            prev_hash: parent.hash,
            transactions,
            drafts: HashMap::new(),
            best: HashMap::new(),
        });
        if !self.config.machine_mining {
            return Ok(out);
        }

        let me = self.address();
        let round = self.round.as_mut().expect("round was just opened");
        let draft = round.draft_for(me).clone();
        let cfg = SolverConfig {
            random_seed: self.config.solver.random_seed.wrapping_add(draft.template.number),
            ..self.config.solver
        };
        let result = beam_solve(&draft.search.start_puzzle, &cfg);
        round.best.insert(me, result.score);
        let txs = round.transactions.clone();
        let id = BlockId(self.rng.gen());
        let block = Block::finalize(id, draft.template, draft.search, result.solution)
            .map_err(|e| RoundError::OwnBlockRejected(e.to_string()))?;
        let bundle = BlockBundle {
            block,
            transactions: txs,
        };
        self.ingest_own(bundle.clone(), now).map_err(RoundError::OwnBlockRejected)?;
        self.stats.rounds_mined += 1;
        // Announce the reward claim right away so every node can include it
        // next round; it only applies if this block ends up on the chain.
        let claim = TxBody::reward_claim(bundle.block.timestamp, me, bundle.block.id, 0, me)
            .sign(&self.keys)
            .expect("the claim is signed by its recipient");
        out.push(Outbound::Broadcast {
            message: self.message(Payload::AnnounceBlock(bundle)),
            except: None,
        });
        if self.seen.insert(claim.id) && self.mempool.admit(claim.clone(), now).is_ok() {
            out.push(Outbound::Broadcast {
                message: self.message(Payload::NewTransaction(claim)),
                except: None,
            });
        }
        Ok(out)
    }

    /// The block a competition at `competition_ts` builds on: the newest
    /// head-chain block older than the competition. Usually the head; a
    /// rival's block from this same competition is skipped so this node's
    /// entry competes with it instead of being dropped.
    fn round_base(&self, competition_ts: u64) -> Hash {
        let head = self.store.head().block.hash;
        self.store
            .ancestors(&head)
            .find(|c| c.block.timestamp < competition_ts || c.block.is_genesis())
            .map(|c| c.block.hash)
            .expect("every chain ends at genesis")
    }

    /// Reward claims for this node's recent blocks on `base`'s chain that
    /// are still unclaimed and within the claim window of the next block.
    fn own_reward_claims(&self, base: &Hash) -> Vec<Transaction> {
        let base_ctx = self.store.get(base).expect("base is a stored block");
        let next = base_ctx.block.number + 1;
        let me = self.address();
        self.store
            .ancestors(base)
            .take_while(|c| next - c.block.number <= REWARD_CLAIM_WINDOW && !c.block.is_genesis())
            .filter(|c| c.block.solver == me && !base_ctx.ledger.is_claimed(&c.block.id))
            .map(|c| {
                TxBody::reward_claim(c.block.timestamp, me, c.block.id, 0, me)
                    .sign(&self.keys)
                    .expect("the claim is signed by its recipient")
            })
            .collect()
    }

    /// Mempool transactions that fit the timing windows for a block at
    /// `block_ts` and apply cleanly, in order, on `base`'s ledger.
    fn select_transactions(&self, base: &Hash, block_ts: u64, now: u64) -> Vec<Transaction> {
        let base_ctx = self.store.get(base).expect("base is a stored block");
        let number = base_ctx.block.number + 1;
        let lookup = |id: &BlockId| {
            self.store
                .ancestors(base)
                .find(|c| c.block.id == *id)
                .map(|c| AncestorInfo {
                    number: c.block.number,
                    solver: c.block.solver,
                })
        };
        let mut ledger = base_ctx.ledger.clone();
        let mut chosen = Vec::new();
        for tx in self.mempool.ordered() {
            if validate_tx_in_block(tx, block_ts, now).is_err() {
                continue;
            }
            if ledger.apply_tx(tx, number, &lookup).is_ok() {
                chosen.push(tx.clone());
            }
        }
        chosen
    }

    fn ingest_own(&mut self, bundle: BlockBundle, now: u64) -> Result<IngestOutcome, String> {
        match self.ingest(bundle, now, IngestMode::Live) {
            Ok(IngestOutcome::Duplicate) => Err("block hash or id already stored".to_string()),
            Ok(outcome) => Ok(outcome),
            Err(r) => Err(r.to_string()),
        }
    }

    /// Ingests a block, logs it, and settles any orphans waiting on it.
    fn ingest(&mut self, bundle: BlockBundle, now: u64, mode: IngestMode) -> Result<IngestOutcome, Rejection> {
        let hash = bundle.block.hash;
        let first = self.ingest_one(bundle, now, mode)?;
        let IngestOutcome::Accepted { mut head_changed } = first else {
            return Ok(first);
        };
        let mut ready = vec![hash];
        while let Some(parent) = ready.pop() {
            for (orphan, arrived) in self.orphans.remove(&parent).unwrap_or_default() {
                self.orphan_count -= 1;
                let hash = orphan.block.hash;
                match self.ingest_one(orphan, arrived, IngestMode::Live) {
                    Ok(o) => {
                        head_changed |= o.head_changed();
                        ready.push(hash);
                    }
                    Err(r) => debug!(%hash, reason = %r, "orphan rejected"),
                }
            }
        }
        Ok(IngestOutcome::Accepted { head_changed })
    }

    fn ingest_one(&mut self, bundle: BlockBundle, now: u64, mode: IngestMode) -> Result<IngestOutcome, Rejection> {
        let record = self.log.as_ref().map(|_| bundle.clone());
        let hash = bundle.block.hash;
        match self.store.ingest(bundle, now, mode) {
            Ok(outcome) => {
                if let IngestOutcome::Accepted { .. } = outcome {
                    // Only accepted content is marked seen, so a forgery
                    // reusing a hash or id cannot shadow the real message.
                    self.seen.insert(hash);
                    self.stats.blocks_accepted += 1;
                    if let (Some(log), Some(record)) = (self.log.as_mut(), record) {
                        if let Err(e) = log.append(&record) {
                            warn!(error = %e, "could not append block to chain log");
                        }
                    }
                }
                Ok(outcome)
            }
            Err(r) => {
                if r.unknown_parent().is_none() {
                    self.stats.blocks_rejected += 1;
                }
                Err(r)
            }
        }
    }

    fn hold_orphan(&mut self, bundle: BlockBundle, arrived: u64) {
        if self.orphan_count >= MAX_ORPHANS {
            debug!("orphan pool full; dropping block");
            return;
        }
        let parent = bundle.block.prev_hash;
        let slot = self.orphans.entry(parent).or_default();
        if slot.iter().any(|(b, _)| b.block.hash == bundle.block.hash) {
            return;
        }
        slot.push((bundle, arrived));
        self.orphan_count += 1;
    }

    /// Processes one gossip message received at `now`.
    pub fn handle_message(&mut self, msg: Message, now: u64) -> Vec<Outbound> {
        let Message { sender, payload } = msg;
        match payload {
            Payload::AnnounceBlock(bundle) => self.on_announce(sender, bundle, now),
            Payload::NewTransaction(tx) => self.on_transaction(sender, tx, now),
            Payload::RequestChain { from } => {
                let blocks = self
                    .store
                    .chain_from(from.max(1))
                    .into_iter()
                    .map(|c| BlockBundle {
                        block: c.block.clone(),
                        transactions: c.transactions.clone(),
                    })
                    .collect();
                vec![Outbound::Send {
                    to: sender,
                    message: self.message(Payload::ChainResponse { blocks }),
                }]
            }
            Payload::ChainResponse { blocks } => self.on_chain_response(sender, blocks, now),
        }
    }

    /// Parses a raw frame body and processes it; unparseable input is
    /// dropped.
    pub fn handle_frame(&mut self, body: &[u8], now: u64) -> Vec<Outbound> {
        match Message::from_json(body) {
            Ok(msg) => self.handle_message(msg, now),
            Err(e) => {
                warn!(error = %e, "dropping malformed message");
                Vec::new()
            }
        }
    }

    fn on_announce(&mut self, sender: NodeId, bundle: BlockBundle, now: u64) -> Vec<Outbound> {
        let hash = bundle.block.hash;
        if self.seen.contains(&hash) || self.store.contains(&hash) {
            return Vec::new();
        }
        let forward = bundle.clone();
        match self.ingest(bundle.clone(), now, IngestMode::Live) {
            Ok(outcome) if outcome.head_changed() => vec![Outbound::Broadcast {
                message: self.message(Payload::AnnounceBlock(forward)),
                except: Some(sender),
            }],
            Ok(_) => Vec::new(),
            Err(rejection) => match rejection.unknown_parent() {
                Some(parent_number) => {
                    self.hold_orphan(bundle, now);
                    self.sync_requested_at = Some(now);
                    vec![Outbound::Send {
                        to: sender,
                        message: self.message(Payload::RequestChain { from: parent_number }),
                    }]
                }
                None => {
                    debug!(%hash, reason = %rejection, "block rejected");
                    Vec::new()
                }
            },
        }
    }

    fn on_transaction(&mut self, sender: NodeId, tx: Transaction, now: u64) -> Vec<Outbound> {
        if self.seen.contains(&tx.id) {
            return Vec::new();
        }
        match self.mempool.admit(tx.clone(), now) {
            Ok(()) => {
                self.seen.insert(tx.id);
                self.stats.txs_admitted += 1;
                vec![Outbound::Broadcast {
                    message: self.message(Payload::NewTransaction(tx)),
                    except: Some(sender),
                }]
            }
            Err(e) => {
                self.stats.txs_rejected += 1;
                debug!(id = %tx.id, reason = %e, "transaction dropped");
                Vec::new()
            }
        }
    }

    fn on_chain_response(&mut self, sender: NodeId, blocks: Vec<BlockBundle>, now: u64) -> Vec<Outbound> {
        let before = self.store.head().block.hash;
        let first_number = blocks.first().map(|b| b.block.number);
        for bundle in blocks {
            let hash = bundle.block.hash;
            match self.ingest(bundle, now, IngestMode::Replay) {
                Ok(_) => {}
                Err(rejection) if rejection.unknown_parent().is_some() => {
                    // The response starts past our fork point; ask for everything.
                    if first_number.is_some_and(|n| n > 1) {
                        return vec![Outbound::Send {
                            to: sender,
                            message: self.message(Payload::RequestChain { from: 1 }),
                        }];
                    }
                    break;
                }
                Err(rejection) => {
                    debug!(%hash, reason = %rejection, "synced block rejected");
                    break;
                }
            }
        }
        self.sync_requested_at = None;
        let head = self.store.head();
        if head.block.hash == before {
            return Vec::new();
        }
        let bundle = BlockBundle {
            block: head.block.clone(),
            transactions: head.transactions.clone(),
        };
        vec![Outbound::Broadcast {
            message: self.message(Payload::AnnounceBlock(bundle)),
            except: Some(sender),
        }]
    }

    /// Admits a client transaction and gossips it.
    pub fn submit_transaction(&mut self, tx: Transaction, now: u64) -> Result<Vec<Outbound>, AdmissionError> {
        if self.ledger().contains_tx(&tx.id) {
            return Err(AdmissionError::Duplicate);
        }
        match self.mempool.admit(tx.clone(), now) {
            Ok(()) => {
                self.stats.txs_admitted += 1;
                self.seen.insert(tx.id);
                Ok(vec![Outbound::Broadcast {
                    message: self.message(Payload::NewTransaction(tx)),
                    except: None,
                }])
            }
            Err(e) => {
                self.stats.txs_rejected += 1;
                Err(e)
            }
        }
    }

    /// The start puzzle for `solver` in the open competition, building the
    /// solver's draft on first request.
    pub fn puzzle_for(&mut self, solver: Address, now: u64) -> Result<PuzzleView, SubmissionError> {
        let round = self.round.as_mut().ok_or(SubmissionError::NoOpenCompetition)?;
        if now > round.deadline() {
            return Err(SubmissionError::NoOpenCompetition);
        }
        let (number, competition_ts, deadline, prev_hash) =
            (round.number, round.timestamp, round.deadline(), round.prev_hash);
        let draft = round.draft_for(solver);
        Ok(PuzzleView {
            number,
            competition_ts,
            deadline,
            puzzle: draft.search.start_puzzle.clone(),
            prev_hash,
            magic: draft.search.magic,
        })
    }

    /// Takes a human's solution for their draft, builds the block, ingests
    /// it and announces it. Only a better score than the address's earlier
    /// submission this round is accepted.
    pub fn submit_solution(
        &mut self,
        number: u64,
        solver: Address,
        solution_text: &str,
        now: u64,
    ) -> Result<(SubmissionReceipt, Vec<Outbound>), SubmissionError> {
        let round = self.round.as_mut().ok_or(SubmissionError::NoOpenCompetition)?;
        if round.number != number {
            return Err(SubmissionError::NoOpenCompetition);
        }
        if now > round.deadline() {
            return Err(SubmissionError::TooLate);
        }
        let draft = round.drafts.get(&solver).ok_or(SubmissionError::UnknownSolverDraft)?.clone();
        let solution =
            Solution::decode(solution_text).map_err(|e| SubmissionError::IllegalSolution(e.to_string()))?;
        let end = draft
            .search
            .start_puzzle
            .apply_solution(&solution)
            .map_err(|e| SubmissionError::IllegalSolution(e.to_string()))?;
        let score = end.score();
        if let Some(&best) = round.best.get(&solver) {
            if score <= best {
                return Err(SubmissionError::NotImproved { score, best });
            }
        }
        let transactions = round.transactions.clone();
        let id = BlockId(self.rng.gen());
        let block = Block::finalize(id, draft.template, draft.search, solution)
            .map_err(|e| SubmissionError::IllegalSolution(e.to_string()))?;
        let bundle = BlockBundle { block, transactions };
        let outcome = self
            .ingest_own(bundle.clone(), now)
            .map_err(SubmissionError::BlockRejected)?;
        if let Some(round) = self.round.as_mut() {
            round.best.insert(solver, score);
        }
        let receipt = SubmissionReceipt {
            number,
            block_id: bundle.block.id,
            hash: bundle.block.hash,
            score,
            head_changed: outcome.head_changed(),
        };
        let out = vec![Outbound::Broadcast {
            message: self.message(Payload::AnnounceBlock(bundle)),
            except: None,
        }];
        Ok((receipt, out))
    }

    pub fn balance(&self, account: &Address) -> u64 {
        self.ledger().balance(account)
    }

    /// Head-chain blocks from `from` upward.
    pub fn chain_from(&self, from: u64) -> Vec<BlockBundle> {
        self.store
            .chain_from(from)
            .into_iter()
            .map(|c| BlockBundle {
                block: c.block.clone(),
                transactions: c.transactions.clone(),
            })
            .collect()
    }

    pub fn block_at(&self, number: u64) -> Option<BlockBundle> {
        self.store.block_at(number).map(|c| BlockBundle {
            block: c.block.clone(),
            transactions: c.transactions.clone(),
        })
    }
}
