//! HTTP/JSON surface for clients: puzzles, solutions, transactions and
//! chain queries.

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mifty_core::chain::{Address, Hash, PublicKey, Signature, Transaction, TxBody};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::mempool::AdmissionError;
use crate::node::SubmissionError;
use crate::service::{NodeHandle, NodeStopped};

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionRequest {
    pub number: u64,
    pub address: Address,
    pub solution: String,
}

/// A signed transaction as submitted by a client. The id is derived by
/// the node; if the client sends one it must match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<Hash>,
    #[serde(flatten)]
    pub body: TxBody,
    pub public_key: PublicKey,
    pub signature: Signature,
}

impl From<Transaction> for TransactionRequest {
    fn from(tx: Transaction) -> Self {
        TransactionRequest {
            id: Some(tx.id),
            body: tx.body,
            public_key: tx.public_key,
            signature: tx.signature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionResponse {
    pub id: Hash,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceResponse {
    pub address: Address,
    pub balance: u64,
}

#[derive(Debug, Deserialize)]
struct PuzzleQuery {
    address: String,
}

#[derive(Debug, Deserialize)]
struct ChainQuery {
    #[serde(default)]
    from: u64,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.to_string(),
                message: message.into(),
            },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<NodeStopped> for ApiError {
    fn from(e: NodeStopped) -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "NodeStopped", e.to_string())
    }
}

impl From<SubmissionError> for ApiError {
    fn from(e: SubmissionError) -> Self {
        let status = match e {
            SubmissionError::IllegalSolution(_) | SubmissionError::BlockRejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::CONFLICT,
        };
        Self::new(status, e.name(), e.to_string())
    }
}

impl From<AdmissionError> for ApiError {
    fn from(e: AdmissionError) -> Self {
        let status = match e {
            AdmissionError::Duplicate => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.name(), e.to_string())
    }
}

/// JSON body extractor whose failures use [`ErrorBody`].
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(value)) => Ok(ApiJson(value)),
            Err(e) => Err(ApiError::bad_request(rejection_text(e))),
        }
    }
}

fn rejection_text(e: JsonRejection) -> String {
    e.body_text()
}

fn parse_address(text: &str) -> Result<Address, ApiError> {
    text.parse()
        .map_err(|_| ApiError::bad_request(format!("address must be 64 lowercase hex characters, got {text:?}")))
}

pub fn router(handle: NodeHandle) -> Router {
    Router::new()
        .route("/status", get(status))
        .route("/puzzle/current", get(puzzle))
        .route("/solution", post(solution))
        .route("/transaction", post(transaction))
        .route("/balance/{address}", get(balance))
        .route("/chain", get(chain))
        .route("/block/{number}", get(block))
        .with_state(handle)
}

async fn status(State(node): State<NodeHandle>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(node.status().await?))
}

async fn puzzle(
    State(node): State<NodeHandle>,
    query: Result<Query<PuzzleQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let address = parse_address(&q.address)?;
    Ok(Json(node.puzzle(address).await??))
}

async fn solution(
    State(node): State<NodeHandle>,
    ApiJson(req): ApiJson<SolutionRequest>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(node.submit_solution(req.number, req.address, req.solution).await??))
}

async fn transaction(
    State(node): State<NodeHandle>,
    ApiJson(req): ApiJson<TransactionRequest>,
) -> Result<impl IntoResponse, ApiError> {
    let id = req.body.hash();
    if req.id.is_some_and(|given| given != id) {
        return Err(ApiError::bad_request(format!("id does not match the transaction body (expected {id})")));
    }
    let tx = Transaction {
        id,
        body: req.body,
        public_key: req.public_key,
        signature: req.signature,
    };
    let id = node.submit_transaction(tx).await??;
    Ok(Json(TransactionResponse { id }))
}

async fn balance(State(node): State<NodeHandle>, Path(address): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let address = parse_address(&address)?;
    let balance = node.balance(address).await?;
    Ok(Json(BalanceResponse { address, balance }))
}

async fn chain(
    State(node): State<NodeHandle>,
    query: Result<Query<ChainQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    Ok(Json(node.chain(q.from).await?))
}

async fn block(State(node): State<NodeHandle>, Path(number): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let number: u64 = number
        .parse()
        .map_err(|_| ApiError::bad_request(format!("block number must be an integer, got {number:?}")))?;
    match node.block(number).await? {
        Some(bundle) => Ok(Json(bundle)),
        None => Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "NotFound",
            format!("no block {number} on the current chain"),
        )),
    }
}
