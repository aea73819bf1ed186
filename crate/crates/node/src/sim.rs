//! Deterministic in-process network simulation.
//!
//! N nodes share a virtual clock and a single event queue. Messages are
//! delivered after a seeded random latency and may be dropped; a partition
//! can cut the network in two for the first rounds. The same config always
//! produces the same report, byte for byte.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use mifty_core::chain::{Address, Hash, KeyPair, TxBody};
use mifty_core::consensus::COMPETITION_INTERVAL_MS;
use mifty_core::solver::SolverConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::message::{Message, NodeId};
use crate::node::{NodeConfig, NodeState, Outbound, RoundError};

/// First competition of a default simulation (2023-11-14T22:20:00Z).
pub const DEFAULT_START_MS: u64 = 1_700_000_400_000;
/// When, after a competition opens, simulated users send transfers.
const TRANSFER_OFFSET_MS: u64 = 60_000;
const TRANSFER_AMOUNT: u64 = 100;
const TRANSFER_FEE: u64 = 1;

/// Splits nodes `[0, split)` from `[split, n)`; every message between the
/// halves is lost until round `heal_after` starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub split: usize,
    pub heal_after: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub node_count: usize,
    pub latency_min_ms: u64,
    pub latency_max_ms: u64,
    pub drop_probability: f64,
    pub seed: u64,
    pub competitions_to_run: u32,
    pub start_ms: u64,
    pub beam_width: usize,
    /// Each node with funds pays the next node a small amount every round.
    pub transfers: bool,
    pub partition: Option<Partition>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            node_count: 3,
            latency_min_ms: 50,
            latency_max_ms: 500,
            drop_probability: 0.0,
            seed: 7,
            competitions_to_run: 5,
            start_ms: DEFAULT_START_MS,
            beam_width: SolverConfig::default().beam_width,
            transfers: false,
            partition: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimConfigError {
    #[error("node_count must be at least 1")]
    NoNodes,
    #[error("latency range {0}..{1} is empty")]
    BadLatency(u64, u64),
    #[error("drop probability {0} is outside [0, 1)")]
    BadDropProbability(String),
    #[error("start time {0} is not a competition boundary")]
    BadStart(u64),
    #[error("partition split {0} must fall strictly inside the node range")]
    BadPartition(usize),
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimConfigError> {
        if self.node_count == 0 {
            return Err(SimConfigError::NoNodes);
        }
        if self.latency_min_ms > self.latency_max_ms {
            return Err(SimConfigError::BadLatency(self.latency_min_ms, self.latency_max_ms));
        }
        if !(0.0..1.0).contains(&self.drop_probability) {
            return Err(SimConfigError::BadDropProbability(self.drop_probability.to_string()));
        }
        if !self.start_ms.is_multiple_of(COMPETITION_INTERVAL_MS) {
            return Err(SimConfigError::BadStart(self.start_ms));
        }
        if let Some(p) = self.partition {
            if p.split == 0 || p.split >= self.node_count {
                return Err(SimConfigError::BadPartition(p.split));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeHead {
    pub node: NodeId,
    pub number: u64,
    pub hash: Hash,
    pub solver: Address,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u32,
    pub competition_ts: u64,
    pub heads: Vec<NodeHead>,
    pub converged: bool,
    /// Distinct blocks any node stored at this round's block number.
    pub candidate_blocks: usize,
    /// Candidates beyond the single winner.
    pub forks: usize,
    pub winner: Option<Address>,
    pub skipped: Vec<NodeId>,
    pub ledgers_conserved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub node: NodeId,
    pub address: Address,
    pub head_number: u64,
    pub balances: BTreeMap<Address, u64>,
    pub claimed_rewards: usize,
    pub total: u64,
    pub conserved: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub partitioned: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub rounds: Vec<RoundReport>,
    pub ledgers: Vec<LedgerSnapshot>,
    pub traffic: TrafficStats,
    pub all_rounds_converged: bool,
    pub all_ledgers_conserved: bool,
}

impl fmt::Display for SimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(
            f,
            "simulation: {} nodes, {} rounds, seed {}, latency {}..{} ms, drop {}",
            c.node_count, c.competitions_to_run, c.seed, c.latency_min_ms, c.latency_max_ms, c.drop_probability
        )?;
        for r in &self.rounds {
            let head = r.heads.first().map(|h| format!("#{} {}", h.number, h.hash)).unwrap_or_default();
            let state = if r.converged { "converged" } else { "DIVERGED" };
            write!(f, "round {} @ {}: {} head {} forks {}", r.round, r.competition_ts, state, head, r.forks)?;
            if let Some(w) = r.winner {
                write!(f, " winner {w}")?;
            }
            if !r.skipped.is_empty() {
                let names: Vec<String> = r.skipped.iter().map(|n| n.to_string()).collect();
                write!(f, " skipped [{}]", names.join(", "))?;
            }
            writeln!(f)?;
            if !r.converged {
                for h in &r.heads {
                    writeln!(f, "  {}: #{} {}", h.node, h.number, h.hash)?;
                }
            }
        }
        for l in &self.ledgers {
            writeln!(
                f,
                "ledger {} (#{}): total {} claimed {} conserved {}",
                l.node, l.head_number, l.total, l.claimed_rewards, l.conserved
            )?;
            for (account, balance) in &l.balances {
                writeln!(f, "  {account} {balance}")?;
            }
        }
        writeln!(
            f,
            "traffic: sent {} delivered {} dropped {} partitioned {}",
            self.traffic.sent, self.traffic.delivered, self.traffic.dropped, self.traffic.partitioned
        )?;
        write!(
            f,
            "result: converged {} conserved {}",
            self.all_rounds_converged, self.all_ledgers_conserved
        )
    }
}

enum Event {
    Tick { round: u32 },
    Transfers,
    Deliver { to: usize, message: Box<Message> },
}

struct Scheduled {
    time: u64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the max-heap pops the earliest event first.
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct Network {
    cfg: SimConfig,
    nodes: Vec<NodeState>,
    index: BTreeMap<NodeId, usize>,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    rng: ChaCha8Rng,
    current_round: u32,
    traffic: TrafficStats,
    skipped: Vec<NodeId>,
}

impl Network {
    fn new(cfg: SimConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut nodes = Vec::with_capacity(cfg.node_count);
        let mut index = BTreeMap::new();
        for i in 0..cfg.node_count {
            let id = NodeId(format!("node-{i}"));
            let keys = KeyPair::generate(&mut rng);
            let config = NodeConfig {
                solver: SolverConfig {
                    beam_width: cfg.beam_width.max(1),
                    random_seed: rng.gen(),
                    ..SolverConfig::default()
                },
                seed: rng.gen(),
                ..NodeConfig::new(id.clone())
            };
            index.insert(id, i);
            nodes.push(NodeState::new(config, keys));
        }
        Network {
            cfg,
            nodes,
            index,
            queue: BinaryHeap::new(),
            seq: 0,
            rng,
            current_round: 0,
            traffic: TrafficStats::default(),
            skipped: Vec::new(),
        }
    }

    fn schedule(&mut self, time: u64, event: Event) {
        self.seq += 1;
        self.queue.push(Scheduled {
            time,
            seq: self.seq,
            event,
        });
    }

    fn partitioned(&self, a: usize, b: usize) -> bool {
        match self.cfg.partition {
            Some(p) if self.current_round < p.heal_after => (a < p.split) != (b < p.split),
            _ => false,
        }
    }

    fn transmit(&mut self, from: usize, to: usize, message: Message, now: u64) {
        self.traffic.sent += 1;
        if self.partitioned(from, to) {
            self.traffic.partitioned += 1;
            return;
        }
        let latency = self.rng.gen_range(self.cfg.latency_min_ms..=self.cfg.latency_max_ms);
        if self.cfg.drop_probability > 0.0 && self.rng.gen_bool(self.cfg.drop_probability) {
            self.traffic.dropped += 1;
            return;
        }
        self.schedule(now + latency, Event::Deliver { to, message: Box::new(message) });
    }

    fn dispatch(&mut self, from: usize, outbound: Vec<Outbound>, now: u64) {
        for out in outbound {
            match out {
                Outbound::Broadcast { message, except } => {
                    let skip = except.and_then(|id| self.index.get(&id).copied());
                    for to in 0..self.nodes.len() {
                        if to != from && Some(to) != skip {
                            self.transmit(from, to, message.clone(), now);
                        }
                    }
                }
                Outbound::Send { to, message } => {
                    if let Some(&to) = self.index.get(&to) {
                        self.transmit(from, to, message, now);
                    }
                }
            }
        }
    }

    fn handle(&mut self, time: u64, event: Event) {
        match event {
            Event::Tick { round } => {
                self.current_round = round;
                for i in 0..self.nodes.len() {
                    match self.nodes[i].mining_round(time, time) {
                        Ok(out) => self.dispatch(i, out, time),
                        Err(RoundError::SkippedRound) => self.skipped.push(self.nodes[i].id().clone()),
                        Err(e) => tracing::warn!(node = %self.nodes[i].id(), error = %e, "round failed"),
                    }
                }
            }
            Event::Transfers => {
                let n = self.nodes.len();
                if n < 2 {
                    return;
                }
                let recipients: Vec<Address> = self.nodes.iter().map(|s| s.address()).collect();
                for i in 0..n {
                    let node = &mut self.nodes[i];
                    let me = node.address();
                    if node.balance(&me) < TRANSFER_AMOUNT + TRANSFER_FEE {
                        continue;
                    }
                    let tx = TxBody::transfer(time, me, recipients[(i + 1) % n], TRANSFER_AMOUNT, TRANSFER_FEE, me)
                        .sign(node.keys())
                        .expect("node signs for its own address");
                    if let Ok(out) = node.submit_transaction(tx, time) {
                        self.dispatch(i, out, time);
                    }
                }
            }
            Event::Deliver { to, message } => {
                self.traffic.delivered += 1;
                let out = self.nodes[to].handle_message(*message, time);
                self.dispatch(to, out, time);
            }
        }
    }

    fn run_until(&mut self, end: u64) {
        while self.queue.peek().is_some_and(|s| s.time < end) {
            let Scheduled { time, event, .. } = self.queue.pop().expect("peeked");
            self.handle(time, event);
        }
    }

    fn round_report(&mut self, round: u32, competition_ts: u64) -> RoundReport {
        let heads: Vec<NodeHead> = self
            .nodes
            .iter()
            .map(|s| {
                let b = &s.head().block;
                NodeHead {
                    node: s.id().clone(),
                    number: b.number,
                    hash: b.hash,
                    solver: b.solver,
                }
            })
            .collect();
        let converged = heads.windows(2).all(|w| w[0].hash == w[1].hash);
        let number = heads.iter().map(|h| h.number).max().unwrap_or(0);
        let candidates: BTreeSet<Hash> = self
            .nodes
            .iter()
            .flat_map(|s| s.store().at_number(number).into_iter().map(|c| c.block.hash))
            .collect();
        RoundReport {
            round,
            competition_ts,
            converged,
            candidate_blocks: candidates.len(),
            forks: candidates.len().saturating_sub(1),
            winner: converged.then(|| heads[0].solver),
            heads,
            skipped: std::mem::take(&mut self.skipped),
            ledgers_conserved: self.nodes.iter().all(|s| s.ledger().is_conserved()),
        }
    }
}

/// Runs the configured simulation to completion.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimReport, SimConfigError> {
    cfg.validate()?;
    let mut net = Network::new(cfg.clone());
    let mut rounds = Vec::new();
    for round in 0..cfg.competitions_to_run {
        let ts = cfg.start_ms + u64::from(round) * COMPETITION_INTERVAL_MS;
        net.schedule(ts, Event::Tick { round });
        if cfg.transfers {
            net.schedule(ts + TRANSFER_OFFSET_MS, Event::Transfers);
        }
        net.run_until(ts + COMPETITION_INTERVAL_MS);
        rounds.push(net.round_report(round, ts));
    }
    let ledgers: Vec<LedgerSnapshot> = net
        .nodes
        .iter()
        .map(|s| {
            let ledger = s.ledger();
            LedgerSnapshot {
                node: s.id().clone(),
                address: s.address(),
                head_number: s.head().block.number,
                balances: ledger.balances().clone(),
                claimed_rewards: ledger.claimed_rewards().len(),
                total: ledger.total(),
                conserved: ledger.is_conserved(),
            }
        })
        .collect();
    Ok(SimReport {
        config: cfg.clone(),
        all_rounds_converged: rounds.iter().all(|r| r.converged),
        all_ledgers_conserved: rounds.iter().all(|r| r.ledgers_conserved) && ledgers.iter().all(|l| l.conserved),
        rounds,
        ledgers,
        traffic: net.traffic,
    })
}
