use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use mifty_client::{Client, ClientError};
use mifty_core::chain::{verify_block, Address, Block, BlockBundle, KeyPair, Transaction, TxBody};
use mifty_core::consensus::{NodeClock, SystemClock};
use mifty_core::puzzle::Puzzle;
use mifty_core::solver::{beam_solve, SolverConfig};
use mifty_node::service::{start, ServiceConfig};
use mifty_node::sim::{run_simulation, Partition, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

mod vectors;

const KEY_FILE: &str = "node.key";

#[derive(Parser)]
#[command(name = "mifty", version, about = "MiftyCoin node and tools")]
struct Cli {
    /// Print every report as one JSON document.
    #[arg(long, global = true)]
    json: bool,

    /// Node data directory.
    #[arg(long, global = true, env = "MFT_DATA_DIR", default_value = "mifty-data")]
    data_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a key pair and print its address.
    Keygen {
        /// Key file; defaults to node.key in the data directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace an existing key file.
        #[arg(long)]
        force: bool,
    },
    /// Run a live node with the HTTP API and gossip.
    Run {
        #[arg(long, default_value = "127.0.0.1:8080")]
        api: SocketAddr,
        #[arg(long, default_value = "127.0.0.1:9080")]
        gossip: SocketAddr,
        /// Gossip address of a peer; repeatable.
        #[arg(long = "peer")]
        peers: Vec<String>,
        #[arg(long)]
        key: Option<PathBuf>,
        /// Serve human miners only; do not enter machine solutions.
        #[arg(long)]
        no_mining: bool,
        #[arg(long, default_value_t = 0)]
        min_fee: u64,
        #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..=4096))]
        beam: u64,
        /// Start the node clock at this Unix time in ms instead of the wall
        /// clock; it then advances in real time. For devnets and demos.
        #[arg(long)]
        start_time: Option<u64>,
    },
    /// Run the deterministic network simulation.
    Simulate {
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=64))]
        nodes: u64,
        #[arg(long, default_value_t = 5)]
        rounds: u32,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Delivery latency range in ms, as MIN..MAX.
        #[arg(long, default_value = "50..500", value_parser = parse_latency)]
        latency: (u64, u64),
        /// Probability in [0, 1) that a message is lost.
        #[arg(long, default_value_t = 0.0, value_parser = parse_probability)]
        drop: f64,
        #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..=4096))]
        beam: u64,
        /// Have nodes pay each other every round.
        #[arg(long)]
        transfers: bool,
        /// Cut nodes below SPLIT off from the rest until round HEAL, as SPLIT:HEAL.
        #[arg(long, value_parser = parse_partition)]
        partition: Option<Partition>,
    },
    /// Solve a puzzle with the machine solver.
    Solve {
        /// 50-character hex puzzle encoding.
        #[arg(long, value_parser = parse_puzzle)]
        puzzle: Puzzle,
        #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..=4096))]
        beam: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a block file: {"block", "transactions", optional "prev"}.
    VerifyBlock {
        #[arg(long)]
        file: PathBuf,
    },
    /// Emit score test vectors for client implementations.
    Vectors {
        #[arg(long, default_value_t = 64)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write to this file instead of stdout.
        #[arg(long, conflicts_with = "check")]
        out: Option<PathBuf>,
        /// Replay an existing vector file instead of generating one.
        #[arg(long)]
        check: Option<PathBuf>,
    },
    /// Show a node's status.
    Status {
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        api: String,
    },
    /// Show an account balance.
    Balance {
        #[arg(long, value_parser = parse_address)]
        address: Address,
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        api: String,
    },
    /// Fetch the current puzzle for an address.
    Puzzle {
        #[arg(long, value_parser = parse_address)]
        address: Address,
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        api: String,
    },
    /// Submit a solution for the open competition.
    Submit {
        #[arg(long)]
        number: u64,
        #[arg(long, value_parser = parse_address)]
        address: Address,
        /// Move string over U, D, L, R.
        #[arg(long)]
        solution: String,
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        api: String,
    },
    /// Sign and submit a transfer.
    Send {
        #[arg(long)]
        key: Option<PathBuf>,
        #[arg(long, value_parser = parse_address)]
        to: Address,
        #[arg(long)]
        amount: u64,
        #[arg(long, default_value_t = 0)]
        fee: u64,
        /// Broker paid the fee; defaults to the node behind --api.
        #[arg(long, value_parser = parse_address)]
        broker: Option<Address>,
        /// Transaction time in ms; defaults to now.
        #[arg(long)]
        timestamp: Option<u64>,
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        api: String,
    },
    /// Claim the reward for a block this key solved.
    Claim {
        #[arg(long)]
        key: Option<PathBuf>,
        /// Number of the solved block on the node's chain.
        #[arg(long)]
        number: u64,
        #[arg(long, default_value_t = 0)]
        fee: u64,
        #[arg(long, value_parser = parse_address)]
        broker: Option<Address>,
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        api: String,
    },
}

fn parse_latency(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or("expected MIN..MAX")?;
    let a: u64 = a.trim().parse().map_err(|_| format!("bad minimum {a:?}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad maximum {b:?}"))?;
    if a > b {
        return Err(format!("minimum {a} exceeds maximum {b}"));
    }
    Ok((a, b))
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if (0.0..1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is outside [0, 1)"))
    }
}

fn parse_partition(s: &str) -> Result<Partition, String> {
    let (split, heal) = s.split_once(':').ok_or("expected SPLIT:HEAL")?;
    Ok(Partition {
        split: split.parse().map_err(|_| format!("bad split {split:?}"))?,
        heal_after: heal.parse().map_err(|_| format!("bad heal round {heal:?}"))?,
    })
}

fn parse_puzzle(s: &str) -> Result<Puzzle, String> {
    Puzzle::from_hex(s).map_err(|e| e.to_string())
}

fn parse_address(s: &str) -> Result<Address, String> {
    s.parse().map_err(|_| "expected 64 lowercase hex characters".to_string())
}

/// A run that completed but found something invalid: exit code 1.
#[derive(Debug)]
struct Invalid;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match dispatch(cli) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Invalid)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<Result<(), Invalid>> {
    let json = cli.json;
    let data_dir = cli.data_dir;
    match cli.command {
        Command::Keygen { out, force } => keygen(&out.unwrap_or_else(|| data_dir.join(KEY_FILE)), force, json),
        Command::Run {
            api,
            gossip,
            peers,
            key,
            no_mining,
            min_fee,
            beam,
            start_time,
        } => {
            let keys = load_key(&key.unwrap_or_else(|| data_dir.join(KEY_FILE)))?;
            let clock: Arc<dyn NodeClock> = match start_time {
                Some(origin) => Arc::new(ShiftedClock::new(origin)),
                None => Arc::new(SystemClock::new()),
            };
            let cfg = ServiceConfig {
                api_addr: api,
                gossip_addr: gossip,
                peers,
                data_dir: Some(data_dir),
                machine_mining: !no_mining,
                min_fee,
                solver: SolverConfig::with_width(beam as usize),
                ticker: true,
            };
            runtime()?.block_on(run_node(cfg, keys, clock, json))
        }
        Command::Simulate {
            nodes,
            rounds,
            seed,
            latency,
            drop,
            beam,
            transfers,
            partition,
        } => simulate(
            SimConfig {
                node_count: nodes as usize,
                latency_min_ms: latency.0,
                latency_max_ms: latency.1,
                drop_probability: drop,
                seed,
                competitions_to_run: rounds,
                beam_width: beam as usize,
                transfers,
                partition,
                ..SimConfig::default()
            },
            json,
        ),
        Command::Solve { puzzle, beam, seed } => solve(&puzzle, beam as usize, seed, json),
        Command::VerifyBlock { file } => verify_file(&file, json),
        Command::Vectors { check: Some(path), .. } => check_vectors(&path, json),
        Command::Vectors { count, seed, out, .. } => emit_vectors(count, seed, out.as_deref()),
        Command::Status { api } => runtime()?.block_on(status(Client::new(api), json)),
        Command::Balance { address, api } => runtime()?.block_on(async {
            let balance = Client::new(api).balance(&address).await.map_err(api_failure)?;
            if json {
                print_json(&json!({"address": address, "balance": balance}));
            } else {
                println!("{address} {balance} mift-cents ({})", format_mft(balance));
            }
            Ok(Ok(()))
        }),
        Command::Puzzle { address, api } => runtime()?.block_on(async {
            match Client::new(api).puzzle(&address).await {
                Ok(view) => {
                    if json {
                        print_json(&view);
                    } else {
                        println!("block {} competition {} deadline {}", view.number, view.competition_ts, view.deadline);
                        println!("puzzle {}", view.puzzle.to_hex());
                        print!("{}", view.puzzle);
                    }
                    Ok(Ok(()))
                }
                Err(e) => rejected(e, json),
            }
        }),
        Command::Submit {
            number,
            address,
            solution,
            api,
        } => runtime()?.block_on(async {
            match Client::new(api).submit_solution(number, &address, &solution).await {
                Ok(receipt) => {
                    if json {
                        print_json(&receipt);
                    } else {
                        println!("accepted block {} score {} hash {}", receipt.number, receipt.score, receipt.hash);
                    }
                    Ok(Ok(()))
                }
                Err(e) => rejected(e, json),
            }
        }),
        Command::Send {
            key,
            to,
            amount,
            fee,
            broker,
            timestamp,
            api,
        } => {
            let keys = load_key(&key.unwrap_or_else(|| data_dir.join(KEY_FILE)))?;
            runtime()?.block_on(async {
                let client = Client::new(api);
                let broker = match broker {
                    Some(b) => b,
                    None => client.status().await.map_err(api_failure)?.address,
                };
                let ts = timestamp.unwrap_or_else(|| SystemClock::new().now_ms());
                let tx = TxBody::transfer(ts, keys.address(), to, amount, fee, broker).sign(&keys)?;
                submit_tx(&client, &tx, json).await
            })
        }
        Command::Claim {
            key,
            number,
            fee,
            broker,
            api,
        } => {
            let keys = load_key(&key.unwrap_or_else(|| data_dir.join(KEY_FILE)))?;
            runtime()?.block_on(async {
                let client = Client::new(api);
                let block = client.block(number).await.map_err(api_failure)?.block;
                if block.solver != keys.address() {
                    bail!("block {number} was solved by {}, not by this key", block.solver);
                }
                let broker = match broker {
                    Some(b) => b,
                    None => client.status().await.map_err(api_failure)?.address,
                };
                let tx = TxBody::reward_claim(block.timestamp, keys.address(), block.id, fee, broker).sign(&keys)?;
                submit_tx(&client, &tx, json).await
            })
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn format_mft(cents: u64) -> String {
    format!("{}.{:02} MFT", cents / 100, cents % 100)
}

fn api_failure(e: ClientError) -> anyhow::Error {
    anyhow::Error::new(e)
}

/// Reports a node-side rejection as a validation failure; transport
/// problems stay errors.
fn rejected(e: ClientError, json: bool) -> Result<Result<(), Invalid>> {
    match &e {
        ClientError::Api { error, message, .. } => {
            if json {
                print_json(&json!({"rejected": error, "message": message}));
            } else {
                println!("rejected: {error}: {message}");
            }
            Ok(Err(Invalid))
        }
        ClientError::Http(_) => Err(e.into()),
    }
}

async fn submit_tx(client: &Client, tx: &Transaction, json: bool) -> Result<Result<(), Invalid>> {
    match client.submit_transaction(tx).await {
        Ok(r) => {
            if json {
                print_json(&json!({"accepted": true, "id": r.id}));
            } else {
                println!("accepted transaction {}", r.id);
            }
            Ok(Ok(()))
        }
        Err(e) => rejected(e, json),
    }
}

fn keygen(path: &Path, force: bool, json: bool) -> Result<Result<(), Invalid>> {
    if path.exists() && !force {
        bail!("{} already exists; pass --force to replace it", path.display());
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let keys = KeyPair::generate(&mut rand::rngs::OsRng);
    write_secret(path, &keys.secret_hex()).with_context(|| format!("writing {}", path.display()))?;
    if json {
        print_json(&json!({"address": keys.address(), "public_key": keys.public_key(), "key_file": path}));
    } else {
        println!("{}", keys.address());
    }
    Ok(Ok(()))
}

#[cfg(unix)]
fn write_secret(path: &Path, secret: &str) -> std::io::Result<()> {
    use std::os::unix::fs::OpenOptionsExt;
    let mut file = fs::OpenOptions::new()
        .write(true)
        .create(true)
        .truncate(true)
        .mode(0o600)
        .open(path)?;
    writeln!(file, "{secret}")
}

#[cfg(not(unix))]
fn write_secret(path: &Path, secret: &str) -> std::io::Result<()> {
    fs::write(path, format!("{secret}\n"))
}

fn load_key(path: &Path) -> Result<KeyPair> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading key file {} (create one with `mifty keygen`)", path.display()))?;
    KeyPair::from_secret_hex(text.trim()).with_context(|| format!("key file {} is not 64 hex characters", path.display()))
}

/// Wall-clock rate, shifted so it reads `origin` at construction.
struct ShiftedClock {
    origin: u64,
    started: Instant,
}

impl ShiftedClock {
    fn new(origin: u64) -> Self {
        ShiftedClock {
            origin,
            started: Instant::now(),
        }
    }
}

impl NodeClock for ShiftedClock {
    fn now_ms(&self) -> u64 {
        self.origin + self.started.elapsed().as_millis() as u64
    }
}

async fn run_node(cfg: ServiceConfig, keys: KeyPair, clock: Arc<dyn NodeClock>, json: bool) -> Result<Result<(), Invalid>> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let address = keys.address();
    let node = start(cfg, keys, clock)
        .await
        .context("starting node")?;
    if json {
        println!(
            "{}",
            json!({"address": address, "api": format!("http://{}", node.api_addr), "gossip": node.gossip_addr, "replayed_blocks": node.replayed_blocks})
        );
    } else {
        println!("address {address}");
        println!("api http://{}", node.api_addr);
        println!("gossip {}", node.gossip_addr);
    }
    std::io::stdout().flush()?;
    tokio::signal::ctrl_c().await.context("waiting for shutdown signal")?;
    node.abort();
    Ok(Ok(()))
}

fn simulate(cfg: SimConfig, json: bool) -> Result<Result<(), Invalid>> {
    let report = run_simulation(&cfg)?;
    if json {
        print_json(&report);
    } else {
        println!("{report}");
    }
    Ok(if report.all_ledgers_conserved { Ok(()) } else { Err(Invalid) })
}

fn solve(puzzle: &Puzzle, beam: usize, seed: u64, json: bool) -> Result<Result<(), Invalid>> {
    let cfg = SolverConfig {
        beam_width: beam,
        random_seed: seed,
        ..SolverConfig::default()
    };
    let result = beam_solve(puzzle, &cfg);
    if json {
        print_json(&json!({
            "solution": result.solution,
            "score": result.score,
            "moves": result.solution.len(),
            "start_score": puzzle.score(),
        }));
    } else {
        println!("solution: {}", result.solution);
        println!("score: {}", result.score);
        println!("moves: {}", result.solution.len());
    }
    Ok(Ok(()))
}

#[derive(Deserialize)]
struct BlockFile {
    block: Block,
    #[serde(default)]
    transactions: Vec<Transaction>,
    #[serde(default)]
    prev: Option<Block>,
}

fn verify_file(path: &Path, json: bool) -> Result<Result<(), Invalid>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: BlockFile = match serde_json::from_str(&text) {
        Ok(f) => f,
        Err(e) => {
            if json {
                print_json(&json!({"valid": false, "malformed": e.to_string()}));
            } else {
                println!("Malformed: {e}");
            }
            return Ok(Err(Invalid));
        }
    };
    let bundle = BlockBundle {
        block: file.block,
        transactions: file.transactions,
    };
    let result = verify_block(&bundle.block, &bundle.transactions, file.prev.as_ref());
    match result {
        Ok(()) => {
            if json {
                print_json(&json!({"valid": true, "number": bundle.block.number, "hash": bundle.block.hash}));
            } else {
                println!("Valid");
            }
            Ok(Ok(()))
        }
        Err(violations) => {
            if json {
                print_json(&json!({"valid": false, "violations": violations}));
            } else {
                println!("Invalid");
                for v in &violations {
                    println!("  {}: {v}", v.name());
                }
            }
            Ok(Err(Invalid))
        }
    }
}

fn emit_vectors(count: usize, seed: u64, out: Option<&Path>) -> Result<Result<(), Invalid>> {
    let vectors = vectors::generate(count, seed);
    let text = serde_json::to_string_pretty(&vectors)?;
    match out {
        Some(path) => {
            fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {} vectors to {}", vectors.len(), path.display());
        }
        None => println!("{text}"),
    }
    Ok(Ok(()))
}

fn check_vectors(path: &Path, json: bool) -> Result<Result<(), Invalid>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let vectors: Vec<vectors::Vector> =
        serde_json::from_str(&text).with_context(|| format!("{} is not a vector file", path.display()))?;
    let mut failures = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        match v.check() {
            Ok(score) if score == v.expected_score => {}
            Ok(score) => failures.push(format!("vector {i}: expected {} got {score}", v.expected_score)),
            Err(e) => failures.push(format!("vector {i}: {e}")),
        }
    }
    if json {
        print_json(&json!({"vectors": vectors.len(), "failures": failures}));
    } else {
        for f in &failures {
            println!("{f}");
        }
        println!("{} vectors, {} failures", vectors.len(), failures.len());
    }
    Ok(if failures.is_empty() { Ok(()) } else { Err(Invalid) })
}

async fn status(client: Client, json: bool) -> Result<Result<(), Invalid>> {
    let s = client.status().await.map_err(api_failure)?;
    if json {
        print_json(&s);
        return Ok(Ok(()));
    }
    println!("node {}", s.node_id);
    println!("address {}", s.address);
    println!("head #{} {} score {}", s.head.number, s.head.hash, s.head.score);
    match &s.round {
        Some(r) => println!("round #{} opened {} deadline {}", r.number, r.competition_ts, r.deadline),
        None => println!("round none"),
    }
    println!("mempool {} stored {} peers {}", s.mempool, s.stored_blocks, s.peers.len());
    Ok(Ok(()))
}
