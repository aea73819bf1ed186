//! Live node runtime.
//!
//! One actor task owns the [`NodeState`]; the HTTP API, the gossip
//! listener and the competition ticker talk to it through a [`NodeHandle`].
//! Peers are reached over loopback TCP with length-prefixed JSON frames.

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use mifty_core::chain::{Address, BlockBundle, Hash, KeyPair, Transaction};
use mifty_core::consensus::{
    current_competition_time, next_competition_time, ChainLog, NodeClock, MAX_BLOCK_AGE_MS,
};
use mifty_core::solver::SolverConfig;
use serde::{Deserialize, Serialize};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tracing::{debug, info, warn};

use crate::mempool::AdmissionError;
use crate::message::{read_frame, write_message, Message, NodeId};
use crate::node::{
    NodeConfig, NodeState, NodeStats, Outbound, PuzzleView, RoundError, RoundInfo, SubmissionError,
    SubmissionReceipt,
};

/// File inside the data directory holding accepted blocks.
pub const CHAIN_FILE: &str = "chain.jsonl";
const COMMAND_QUEUE: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadInfo {
    pub number: u64,
    pub hash: Hash,
    pub score: u32,
    pub timestamp: u64,
    pub solver: Address,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusResponse {
    pub node_id: NodeId,
    pub address: Address,
    pub now: u64,
    pub head: HeadInfo,
    pub round: Option<RoundInfo>,
    pub stored_blocks: usize,
    pub mempool: usize,
    pub syncing: bool,
    pub peers: Vec<NodeId>,
    pub stats: NodeStats,
}

#[derive(Debug, thiserror::Error)]
#[error("node is shut down")]
pub struct NodeStopped;

enum Command {
    Status(oneshot::Sender<StatusResponse>),
    Puzzle(Address, oneshot::Sender<Result<PuzzleView, SubmissionError>>),
    Solution(u64, Address, String, oneshot::Sender<Result<SubmissionReceipt, SubmissionError>>),
    Transaction(Box<Transaction>, oneshot::Sender<Result<Hash, AdmissionError>>),
    Balance(Address, oneshot::Sender<u64>),
    Chain(u64, oneshot::Sender<Vec<BlockBundle>>),
    Block(u64, oneshot::Sender<Option<BlockBundle>>),
    Frame(Vec<u8>),
    Round(u64, oneshot::Sender<Result<(), RoundError>>),
}

/// Cheap, cloneable access to a running node's event loop.
#[derive(Clone)]
pub struct NodeHandle {
    tx: mpsc::Sender<Command>,
}

impl NodeHandle {
    async fn ask<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, NodeStopped> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(make(reply)).await.map_err(|_| NodeStopped)?;
        rx.await.map_err(|_| NodeStopped)
    }

    pub async fn status(&self) -> Result<StatusResponse, NodeStopped> {
        self.ask(Command::Status).await
    }

    pub async fn puzzle(&self, address: Address) -> Result<Result<PuzzleView, SubmissionError>, NodeStopped> {
        self.ask(|r| Command::Puzzle(address, r)).await
    }

    pub async fn submit_solution(
        &self,
        number: u64,
        address: Address,
        solution: String,
    ) -> Result<Result<SubmissionReceipt, SubmissionError>, NodeStopped> {
        self.ask(|r| Command::Solution(number, address, solution, r)).await
    }

    pub async fn submit_transaction(&self, tx: Transaction) -> Result<Result<Hash, AdmissionError>, NodeStopped> {
        self.ask(|r| Command::Transaction(Box::new(tx), r)).await
    }

    pub async fn balance(&self, address: Address) -> Result<u64, NodeStopped> {
        self.ask(|r| Command::Balance(address, r)).await
    }

    pub async fn chain(&self, from: u64) -> Result<Vec<BlockBundle>, NodeStopped> {
        self.ask(|r| Command::Chain(from, r)).await
    }

    pub async fn block(&self, number: u64) -> Result<Option<BlockBundle>, NodeStopped> {
        self.ask(|r| Command::Block(number, r)).await
    }

    /// Opens the competition at `competition_ts` now.
    pub async fn open_round(&self, competition_ts: u64) -> Result<Result<(), RoundError>, NodeStopped> {
        self.ask(|r| Command::Round(competition_ts, r)).await
    }

    /// Hands a raw gossip frame body to the node.
    pub async fn deliver_frame(&self, body: Vec<u8>) -> Result<(), NodeStopped> {
        self.tx.send(Command::Frame(body)).await.map_err(|_| NodeStopped)
    }
}

/// Outgoing gossip: one writer task per peer, created on first use.
struct Gossip {
    me: NodeId,
    peers: BTreeSet<NodeId>,
    writers: HashMap<NodeId, mpsc::UnboundedSender<Message>>,
}

impl Gossip {
    fn new(me: NodeId, peers: impl IntoIterator<Item = NodeId>) -> Self {
        Gossip {
            peers: peers.into_iter().filter(|p| *p != me).collect(),
            me,
            writers: HashMap::new(),
        }
    }

    fn learn(&mut self, peer: &NodeId) {
        if *peer != self.me && self.peers.insert(peer.clone()) {
            info!(%peer, "learned peer");
        }
    }

    fn send(&mut self, to: &NodeId, message: Message) {
        let writer = self
            .writers
            .entry(to.clone())
            .or_insert_with(|| spawn_writer(to.clone()));
        if writer.send(message).is_err() {
            self.writers.remove(to);
        }
    }

    fn dispatch(&mut self, outbound: Vec<Outbound>) {
        for out in outbound {
            match out {
                Outbound::Broadcast { message, except } => {
                    let targets: Vec<NodeId> =
                        self.peers.iter().filter(|p| Some(*p) != except.as_ref()).cloned().collect();
                    for peer in targets {
                        self.send(&peer, message.clone());
                    }
                }
                Outbound::Send { to, message } => self.send(&to, message),
            }
        }
    }
}

fn spawn_writer(peer: NodeId) -> mpsc::UnboundedSender<Message> {
    let (tx, mut rx) = mpsc::unbounded_channel::<Message>();
    tokio::spawn(async move {
        let mut stream: Option<TcpStream> = None;
        while let Some(message) = rx.recv().await {
            if stream.is_none() {
                match TcpStream::connect(&peer.0).await {
                    Ok(s) => stream = Some(s),
                    Err(e) => {
                        debug!(%peer, error = %e, "peer unreachable; message dropped");
                        continue;
                    }
                }
            }
            let conn = stream.as_mut().expect("connected above");
            if let Err(e) = write_message(conn, &message).await {
                debug!(%peer, error = %e, "write failed; reconnecting on next message");
                stream = None;
            }
        }
    });
    tx
}

async fn run_actor(mut state: NodeState, clock: Arc<dyn NodeClock>, mut gossip: Gossip, mut rx: mpsc::Receiver<Command>) {
    while let Some(cmd) = rx.recv().await {
        let now = clock.now_ms();
        match cmd {
            Command::Status(reply) => {
                let head = &state.head().block;
                let _ = reply.send(StatusResponse {
                    node_id: state.id().clone(),
                    address: state.address(),
                    now,
                    head: HeadInfo {
                        number: head.number,
                        hash: head.hash,
                        score: head.score,
                        timestamp: head.timestamp,
                        solver: head.solver,
                    },
                    round: state.round(),
                    stored_blocks: state.store().len(),
                    mempool: state.mempool().len(),
                    syncing: state.is_syncing(),
                    peers: gossip.peers.iter().cloned().collect(),
                    stats: state.stats().clone(),
                });
            }
            Command::Puzzle(address, reply) => {
                let _ = reply.send(state.puzzle_for(address, now));
            }
            Command::Solution(number, address, text, reply) => {
                let result = state.submit_solution(number, address, &text, now).map(|(receipt, out)| {
                    gossip.dispatch(out);
                    receipt
                });
                let _ = reply.send(result);
            }
            Command::Transaction(tx, reply) => {
                let id = tx.id;
                let result = state.submit_transaction(*tx, now).map(|out| {
                    gossip.dispatch(out);
                    id
                });
                let _ = reply.send(result);
            }
            Command::Balance(address, reply) => {
                let _ = reply.send(state.balance(&address));
            }
            Command::Chain(from, reply) => {
                let _ = reply.send(state.chain_from(from));
            }
            Command::Block(number, reply) => {
                let _ = reply.send(state.block_at(number));
            }
            Command::Frame(body) => match Message::from_json(&body) {
                Ok(message) => {
                    gossip.learn(&message.sender);
                    let out = state.handle_message(message, now);
                    gossip.dispatch(out);
                }
                Err(e) => warn!(error = %e, "dropping malformed gossip frame"),
            },
            Command::Round(ts, reply) => {
                let result = state.mining_round(ts, now).map(|out| gossip.dispatch(out));
                match &result {
                    Ok(()) => info!(ts, head = state.head().block.number, "competition opened"),
                    Err(e) => warn!(ts, error = %e, "competition not opened"),
                }
                let _ = reply.send(result);
            }
        }
    }
}

/// Starts the event loop for `state`.
pub fn spawn_node(state: NodeState, clock: Arc<dyn NodeClock>, peers: Vec<NodeId>) -> NodeHandle {
    let (tx, rx) = mpsc::channel(COMMAND_QUEUE);
    let gossip = Gossip::new(state.id().clone(), peers);
    tokio::spawn(run_actor(state, clock, gossip, rx));
    NodeHandle { tx }
}

/// Accepts peer connections and feeds their frames to the node.
pub async fn serve_gossip(listener: TcpListener, handle: NodeHandle) {
    loop {
        let (mut stream, from) = match listener.accept().await {
            Ok(conn) => conn,
            Err(e) => {
                warn!(error = %e, "gossip accept failed");
                continue;
            }
        };
        let handle = handle.clone();
        tokio::spawn(async move {
            loop {
                match read_frame(&mut stream).await {
                    Ok(Some(body)) => {
                        if handle.deliver_frame(body).await.is_err() {
                            return;
                        }
                    }
                    Ok(None) => return,
                    Err(e) => {
                        debug!(%from, error = %e, "closing gossip connection");
                        return;
                    }
                }
            }
        });
    }
}

/// Opens a competition at every ten-minute boundary of `clock`. On start,
/// the current competition is opened too if its submission window is
/// still running.
pub async fn run_ticker(handle: NodeHandle, clock: Arc<dyn NodeClock>) {
    let now = clock.now_ms();
    let current = current_competition_time(now);
    if now <= current + MAX_BLOCK_AGE_MS && handle.open_round(current).await.is_err() {
        return;
    }
    loop {
        let now = clock.now_ms();
        let next = next_competition_time(now);
        tokio::time::sleep(Duration::from_millis(next - now)).await;
        if handle.open_round(next).await.is_err() {
            return;
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub api_addr: SocketAddr,
    pub gossip_addr: SocketAddr,
    pub peers: Vec<String>,
    pub data_dir: Option<PathBuf>,
    pub machine_mining: bool,
    pub min_fee: u64,
    pub solver: SolverConfig,
    /// Drive competitions from the clock. Off in tests that open rounds by hand.
    pub ticker: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            api_addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            gossip_addr: SocketAddr::from(([127, 0, 0, 1], 9080)),
            peers: Vec::new(),
            data_dir: None,
            machine_mining: true,
            min_fee: 0,
            solver: SolverConfig::default(),
            ticker: true,
        }
    }
}

/// A started node and the addresses it actually bound.
pub struct RunningNode {
    pub handle: NodeHandle,
    pub api_addr: SocketAddr,
    pub gossip_addr: SocketAddr,
    pub replayed_blocks: usize,
    tasks: Vec<JoinHandle<()>>,
}

impl RunningNode {
    pub fn abort(&self) {
        for t in &self.tasks {
            t.abort();
        }
    }
}

impl Drop for RunningNode {
    fn drop(&mut self) {
        self.abort();
    }
}

/// Binds the API and gossip sockets, reloads the chain log and starts all
/// tasks. The node id is the bound gossip address.
pub async fn start(cfg: ServiceConfig, keys: KeyPair, clock: Arc<dyn NodeClock>) -> std::io::Result<RunningNode> {
    let gossip_listener = TcpListener::bind(cfg.gossip_addr).await?;
    let gossip_addr = gossip_listener.local_addr()?;
    let api_listener = TcpListener::bind(cfg.api_addr).await?;
    let api_addr = api_listener.local_addr()?;

    let config = NodeConfig {
        solver: cfg.solver,
        machine_mining: cfg.machine_mining,
        min_fee: cfg.min_fee,
        seed: rand::random(),
        ..NodeConfig::new(NodeId(gossip_addr.to_string()))
    };
    let mut replayed_blocks = 0;
    let state = match &cfg.data_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(CHAIN_FILE);
            let (store, skipped) = ChainLog::replay(&path, clock.now_ms())?;
            if skipped > 0 {
                warn!(skipped, "chain log records no longer validate");
            }
            replayed_blocks = store.len() - 1;
            let mut state = NodeState::with_store(config, keys, store);
            state.attach_log(ChainLog::open(&path)?);
            state
        }
        None => NodeState::new(config, keys),
    };
    info!(%api_addr, %gossip_addr, address = %state.address(), replayed_blocks, "node starting");

    let peers = cfg.peers.iter().map(|p| NodeId(p.clone())).collect();
    let handle = spawn_node(state, clock.clone(), peers);
    let mut tasks = vec![tokio::spawn(serve_gossip(gossip_listener, handle.clone()))];
    let app = crate::api::router(handle.clone());
    tasks.push(tokio::spawn(async move {
        if let Err(e) = axum::serve(api_listener, app).await {
            warn!(error = %e, "api server stopped");
        }
    }));
    if cfg.ticker {
        tasks.push(tokio::spawn(run_ticker(handle.clone(), clock)));
    }
    Ok(RunningNode {
        handle,
        api_addr,
        gossip_addr,
        replayed_blocks,
        tasks,
    })
}
