//! Async HTTP client for a MiftyCoin node's API.

use mifty_core::chain::{Address, BlockBundle, Transaction};
use mifty_node::api::{BalanceResponse, ErrorBody, SolutionRequest, TransactionRequest, TransactionResponse};
use mifty_node::node::{PuzzleView, SubmissionReceipt};
use mifty_node::service::StatusResponse;
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    /// The node answered with an error body.
    #[error("{error}: {message} (HTTP {status})")]
    Api { status: u16, error: String, message: String },
}

impl ClientError {
    /// The node's error name, such as `TooLate`, if the node answered.
    pub fn api_error(&self) -> Option<&str> {
        match self {
            ClientError::Api { error, .. } => Some(error),
            ClientError::Http(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the API root, for example `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn decode<T: DeserializeOwned>(response: reqwest::Response) -> Result<T, ClientError> {
        let status = response.status();
        if status.is_success() {
            return Ok(response.json().await?);
        }
        let text = response.text().await?;
        let body: ErrorBody = serde_json::from_str(&text).unwrap_or(ErrorBody {
            error: status.canonical_reason().unwrap_or("Error").replace(' ', ""),
            message: text,
        });
        Err(ClientError::Api {
            status: status.as_u16(),
            error: body.error,
            message: body.message,
        })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let response = self.http.get(format!("{}{path}", self.base)).send().await?;
        Self::decode(response).await
    }

    async fn post<B: serde::Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        let response = self.http.post(format!("{}{path}", self.base)).json(body).send().await?;
        Self::decode(response).await
    }

    pub async fn status(&self) -> Result<StatusResponse, ClientError> {
        self.get("/status").await
    }

    pub async fn puzzle(&self, address: &Address) -> Result<PuzzleView, ClientError> {
        self.get(&format!("/puzzle/current?address={address}")).await
    }

    pub async fn submit_solution(
        &self,
        number: u64,
        address: &Address,
        solution: &str,
    ) -> Result<SubmissionReceipt, ClientError> {
        let body = SolutionRequest {
            number,
            address: *address,
            solution: solution.to_string(),
        };
        self.post("/solution", &body).await
    }

    pub async fn submit_transaction(&self, tx: &Transaction) -> Result<TransactionResponse, ClientError> {
        self.post("/transaction", &TransactionRequest::from(tx.clone())).await
    }

    pub async fn balance(&self, address: &Address) -> Result<u64, ClientError> {
        let r: BalanceResponse = self.get(&format!("/balance/{address}")).await?;
        Ok(r.balance)
    }

    pub async fn chain(&self, from: u64) -> Result<Vec<BlockBundle>, ClientError> {
        self.get(&format!("/chain?from={from}")).await
    }

    pub async fn block(&self, number: u64) -> Result<BlockBundle, ClientError> {
        self.get(&format!("/block/{number}")).await
    }
}
