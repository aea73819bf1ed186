use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use mifty_core::chain::{genesis, Block, BlockId, BlockTemplate, DEFAULT_MAGIC_CAP};
use mifty_core::puzzle::{Puzzle, TILE_COUNT};
use mifty_core::solver::{beam_solve, SolverConfig};
use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_mifty");
const T0: u64 = 1_700_000_400_000;

fn mifty(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("MFT_DATA_DIR", dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn keygen_writes_a_private_key_and_refuses_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let first = mifty(dir.path(), &["keygen"]);
    assert_eq!(code(&first), 0, "{first:?}");
    let address = stdout(&first).trim().to_string();
    assert_eq!(address.len(), 64);

    let key_path = dir.path().join("node.key");
    let secret = std::fs::read_to_string(&key_path).unwrap();
    assert_eq!(secret.trim().len(), 64);
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = std::fs::metadata(&key_path).unwrap().permissions().mode();
        assert_eq!(mode & 0o777, 0o600);
    }

    let again = mifty(dir.path(), &["keygen"]);
    assert_eq!(code(&again), 1);
    assert!(String::from_utf8_lossy(&again.stderr).contains("already exists"));
    assert_eq!(std::fs::read_to_string(&key_path).unwrap(), secret);

    let forced = mifty(dir.path(), &["--json", "keygen", "--force"]);
    assert_eq!(code(&forced), 0);
    let v: Value = serde_json::from_slice(&forced.stdout).unwrap();
    assert_ne!(v["address"], json!(address));
}

#[test]
fn solve_improves_the_flat_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let flat = Puzzle::from_tiles([0x00; TILE_COUNT], 24).unwrap();
    let out = mifty(dir.path(), &["solve", "--puzzle", &flat.to_hex(), "--beam", "8"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let score: u32 = text
        .lines()
        .find_map(|l| l.strip_prefix("score: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(score >= 36, "{text}");

    let json_out = mifty(dir.path(), &["--json", "solve", "--puzzle", &flat.to_hex(), "--beam", "8"]);
    let v: Value = serde_json::from_slice(&json_out.stdout).unwrap();
    assert_eq!(v["score"], json!(score));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["solve", "--puzzle", "zz"],
        vec!["solve"],
        vec!["simulate", "--drop", "1.5"],
        vec!["simulate", "--latency", "9..3"],
        vec!["balance", "--address", "abc"],
        vec!["frobnicate"],
    ] {
        let out = mifty(dir.path(), &args);
        assert_eq!(code(&out), 2, "{args:?}");
    }
    assert_eq!(code(&mifty(dir.path(), &["--help"])), 0);
}

fn mined_block() -> (Block, Block) {
    let prev = genesis();
    let template = BlockTemplate {
        number: 1,
        timestamp: T0,
        prev_hash: prev.hash,
        solver: mifty_core::chain::Address([3; 32]),
        tx_ids: Vec::new(),
    };
    let search = template.find_magic(DEFAULT_MAGIC_CAP).unwrap();
    let solved = beam_solve(&search.start_puzzle, &SolverConfig::with_width(4));
    let block = Block::finalize(BlockId([9; 32]), template, search, solved.solution).unwrap();
    (block, prev)
}

#[test]
fn verify_block_names_violations() {
    let dir = tempfile::tempdir().unwrap();
    let (block, prev) = mined_block();
    let good = dir.path().join("good.json");
    std::fs::write(&good, json!({"block": block, "transactions": [], "prev": prev}).to_string()).unwrap();
    let out = mifty(dir.path(), &["verify-block", "--file", good.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "Valid");

    let mut tampered = block.clone();
    tampered.score += 1;
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, json!({"block": tampered, "prev": prev}).to_string()).unwrap();
    let out = mifty(dir.path(), &["verify-block", "--file", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.starts_with("Invalid"));
    assert!(text.contains("  ScoreMismatch:"), "{text}");

    let out = mifty(dir.path(), &["--json", "verify-block", "--file", bad.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], json!(false));
    assert_eq!(v["violations"][0]["violation"], json!("score_mismatch"));

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"block\": 3}").unwrap();
    let out = mifty(dir.path(), &["verify-block", "--file", junk.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with("Malformed"));

    let out = mifty(dir.path(), &["verify-block", "--file", "/nonexistent/block.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--nodes", "3", "--rounds", "5", "--seed", "7"];
    let a = mifty(dir.path(), &args);
    let b = mifty(dir.path(), &args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());

    let mut json_args = vec!["--json"];
    json_args.extend(args);
    let j = mifty(dir.path(), &json_args);
    let v: Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v["all_rounds_converged"], json!(true));
    assert_eq!(v["all_ledgers_conserved"], json!(true));
    assert_eq!(v["rounds"].as_array().unwrap().len(), 5);
}

#[test]
fn vectors_round_trip_through_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors.json");
    let out = mifty(dir.path(), &["vectors", "--count", "50", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let vectors: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(vectors.len(), 50);
    for v in &vectors {
        assert_eq!(v["puzzle_hex"].as_str().unwrap().len(), 50);
        assert!(v["moves"].is_string());
        assert!(v["expected_score"].as_u64().unwrap() <= 38);
    }

    let out = mifty(dir.path(), &["vectors", "--check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("50 vectors, 0 failures"));

    let mut broken = vectors.clone();
    let s = broken[0]["expected_score"].as_u64().unwrap();
    broken[0]["expected_score"] = json!(s ^ 1);
    std::fs::write(&path, serde_json::to_string(&broken).unwrap()).unwrap();
    let out = mifty(dir.path(), &["vectors", "--check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("1 failures"));

    let stdout_run = mifty(dir.path(), &["vectors", "--count", "5"]);
    let printed: Vec<Value> = serde_json::from_slice(&stdout_run.stdout).unwrap();
    assert_eq!(printed.len(), 5);
}

struct Node {
    child: Child,
    api: String,
}

impl Drop for Node {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn run_node(dir: &Path) -> Node {
    let start = (T0 + 1_000).to_string();
    let mut child = Command::new(BIN)
        .args([
            "run",
            "--api",
            "127.0.0.1:0",
            "--gossip",
            "127.0.0.1:0",
            "--no-mining",
            "--start-time",
            &start,
        ])
        .env("MFT_DATA_DIR", dir)
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let api = loop {
        let line = lines.next().expect("node prints its api address").unwrap();
        if let Some(url) = line.strip_prefix("api ") {
            break url.to_string();
        }
    };
    Node { child, api }
}

fn field<'a>(text: &'a str, prefix: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(prefix))
        .unwrap_or_else(|| panic!("no `{prefix}` line in:\n{text}"))
}

#[test]
fn client_commands_against_a_running_node() {
    let node_dir = tempfile::tempdir().unwrap();
    let user_dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&mifty(node_dir.path(), &["keygen"])), 0);
    let human = stdout(&mifty(user_dir.path(), &["keygen"])).trim().to_string();
    let node = run_node(node_dir.path());
    let api_url = node.api.clone();
    let api = api_url.as_str();

    let status = mifty(user_dir.path(), &["status", "--api", api]);
    assert_eq!(code(&status), 0);
    let status_text = stdout(&status);
    assert!(status_text.contains("head #0"), "{status_text}");
    let node_address = field(&status_text, "address ").to_string();

    // The node clock starts just after a competition boundary, so the
    // ticker opens round 1 straight away.
    let mut puzzle = None;
    for _ in 0..100 {
        let out = mifty(user_dir.path(), &["puzzle", "--address", &human, "--api", api]);
        if code(&out) == 0 {
            puzzle = Some(stdout(&out));
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(50));
    }
    let puzzle = puzzle.expect("competition opens");
    assert!(puzzle.starts_with("block 1 "), "{puzzle}");
    let hex = field(&puzzle, "puzzle ").to_string();

    let solved = mifty(user_dir.path(), &["--json", "solve", "--puzzle", &hex, "--beam", "4"]);
    let v: Value = serde_json::from_slice(&solved.stdout).unwrap();
    let moves = v["solution"].as_str().unwrap().to_string();

    let illegal = mifty(
        user_dir.path(),
        &["submit", "--number", "1", "--address", &human, "--solution", "UUUUUU", "--api", api],
    );
    assert_eq!(code(&illegal), 1);
    assert!(stdout(&illegal).starts_with("rejected: IllegalSolution"));

    let accepted = mifty(
        user_dir.path(),
        &["submit", "--number", "1", "--address", &human, "--solution", &moves, "--api", api],
    );
    assert_eq!(code(&accepted), 0, "{}", stdout(&accepted));
    assert!(stdout(&accepted).starts_with("accepted block 1"));

    let again = mifty(
        user_dir.path(),
        &["submit", "--number", "1", "--address", &human, "--solution", &moves, "--api", api],
    );
    assert_eq!(code(&again), 1);
    assert!(stdout(&again).starts_with("rejected: NotImproved"));

    let claim = mifty(user_dir.path(), &["claim", "--number", "1", "--fee", "10", "--api", api]);
    assert_eq!(code(&claim), 0, "{}", stdout(&claim));
    assert!(stdout(&claim).starts_with("accepted transaction "));

    let wrong_solver = mifty(node_dir.path(), &["claim", "--number", "1", "--api", api]);
    assert_eq!(code(&wrong_solver), 1);

    let ts = (T0 + 2_000).to_string();
    let send = mifty(
        user_dir.path(),
        &["send", "--to", &node_address, "--amount", "5", "--fee", "1", "--timestamp", &ts, "--api", api],
    );
    assert_eq!(code(&send), 0, "{}", stdout(&send));
    let stale = mifty(
        user_dir.path(),
        &["send", "--to", &node_address, "--amount", "5", "--timestamp", "1000", "--api", api],
    );
    assert_eq!(code(&stale), 1);
    assert!(stdout(&stale).starts_with("rejected: TimestampOutOfWindow"));

    let balance = mifty(user_dir.path(), &["--json", "balance", "--address", &human, "--api", api]);
    assert_eq!(code(&balance), 0);
    let v: Value = serde_json::from_slice(&balance.stdout).unwrap();
    assert_eq!(v["balance"], json!(0));

    let status = mifty(user_dir.path(), &["--json", "status", "--api", api]);
    let v: Value = serde_json::from_slice(&status.stdout).unwrap();
    assert_eq!(v["head"]["number"], json!(1));
    assert_eq!(v["mempool"], json!(2));
    drop(node);

    let down = mifty(user_dir.path(), &["status", "--api", api]);
    assert_eq!(code(&down), 1);
}
