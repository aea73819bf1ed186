use std::net::SocketAddr;
use std::sync::Arc;

use mifty_client::{Client, ClientError};
use mifty_core::chain::{Address, KeyPair, TxBody};
use mifty_core::consensus::ManualClock;
use mifty_core::solver::{beam_solve, SolverConfig};
use mifty_node::service::{start, RunningNode, ServiceConfig};

const T0: u64 = 1_700_000_400_000;

async fn node(clock: &ManualClock) -> RunningNode {
    let any = SocketAddr::from(([127, 0, 0, 1], 0));
    let cfg = ServiceConfig {
        api_addr: any,
        gossip_addr: any,
        machine_mining: false,
        ticker: false,
        ..ServiceConfig::default()
    };
    start(cfg, KeyPair::from_secret([4; 32]), Arc::new(clock.clone()))
        .await
        .unwrap()
}

#[tokio::test]
async fn full_round_through_the_client() {
    let clock = ManualClock::new(T0);
    let n = node(&clock).await;
    let client = Client::new(format!("http://{}/", n.api_addr));

    let status = client.status().await.unwrap();
    assert_eq!(status.head.number, 0);

    let human = KeyPair::from_secret([0x11; 32]);
    let err = client.puzzle(&human.address()).await.unwrap_err();
    assert_eq!(err.api_error(), Some("NoOpenCompetition"));

    n.handle.open_round(T0).await.unwrap().unwrap();
    let view = client.puzzle(&human.address()).await.unwrap();
    assert_eq!(view.number, 1);
    let solved = beam_solve(&view.puzzle, &SolverConfig::with_width(8));
    let receipt = client
        .submit_solution(1, &human.address(), &solved.solution.encode())
        .await
        .unwrap();
    assert_eq!(receipt.score, solved.score);

    let block = client.block(1).await.unwrap();
    assert_eq!(block.block.solver, human.address());
    assert_eq!(client.chain(0).await.unwrap().len(), 2);
    assert_eq!(client.block(2).await.unwrap_err().api_error(), Some("NotFound"));

    // The human claims their reward; it is mined in the next round.
    let claim = TxBody::reward_claim(T0, human.address(), block.block.id, 10, status.address)
        .sign(&human)
        .unwrap();
    let accepted = client.submit_transaction(&claim).await.unwrap();
    assert_eq!(accepted.id, claim.id);
    let dup = client.submit_transaction(&claim).await.unwrap_err();
    assert!(matches!(dup, ClientError::Api { status: 409, .. }));

    clock.set(T0 + 600_000);
    n.handle.open_round(T0 + 600_000).await.unwrap().unwrap();
    let view = client.puzzle(&human.address()).await.unwrap();
    client
        .submit_solution(2, &human.address(), &beam_solve(&view.puzzle, &SolverConfig::with_width(2)).solution.encode())
        .await
        .unwrap();
    assert_eq!(client.balance(&human.address()).await.unwrap(), 4990);
    assert_eq!(client.balance(&status.address).await.unwrap(), 10);
}

#[tokio::test]
async fn unreachable_node_is_an_http_error() {
    let client = Client::new("http://127.0.0.1:9");
    let err = client.balance(&Address([0; 32])).await.unwrap_err();
    assert!(matches!(err, ClientError::Http(_)));
    assert!(err.api_error().is_none());
}
