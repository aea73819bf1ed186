//! Gossip messages and their length-prefixed JSON framing.

use std::fmt;

use mifty_core::chain::{BlockBundle, Transaction};
use serde::{Deserialize, Serialize};
use tokio::io::{AsyncRead, AsyncReadExt, AsyncWrite, AsyncWriteExt};

/// Largest frame accepted from a peer.
pub const MAX_FRAME_LEN: u32 = 32 * 1024 * 1024;

/// Node identity on the gossip network. In live mode this is the node's
/// gossip listen address, so replies can be routed back.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Payload {
    AnnounceBlock(BlockBundle),
    NewTransaction(Transaction),
    RequestChain { from: u64 },
    ChainResponse { blocks: Vec<BlockBundle> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: NodeId,
    #[serde(flatten)]
    pub payload: Payload,
}

impl Message {
    pub fn new(sender: NodeId, payload: Payload) -> Self {
        Message { sender, payload }
    }

    pub fn kind(&self) -> &'static str {
        match self.payload {
            Payload::AnnounceBlock(_) => "AnnounceBlock",
            Payload::NewTransaction(_) => "NewTransaction",
            Payload::RequestChain { .. } => "RequestChain",
            Payload::ChainResponse { .. } => "ChainResponse",
        }
    }

    /// Big-endian u32 length followed by the JSON record.
    pub fn to_frame(&self) -> Vec<u8> {
        let body = serde_json::to_vec(self).expect("messages always serialize");
        let mut frame = Vec::with_capacity(body.len() + 4);
        frame.extend_from_slice(&(body.len() as u32).to_be_bytes());
        frame.extend_from_slice(&body);
        frame
    }

    pub fn from_json(body: &[u8]) -> Result<Message, serde_json::Error> {
        serde_json::from_slice(body)
    }
}

/// Reads one frame body. `Ok(None)` on clean end of stream.
pub async fn read_frame<R: AsyncRead + Unpin>(reader: &mut R) -> std::io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match reader.read_exact(&mut len).await {
        Ok(_) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len);
    if len > MAX_FRAME_LEN {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("frame of {len} bytes exceeds limit"),
        ));
    }
    let mut body = vec![0u8; len as usize];
    reader.read_exact(&mut body).await?;
    Ok(Some(body))
}

pub async fn write_message<W: AsyncWrite + Unpin>(writer: &mut W, msg: &Message) -> std::io::Result<()> {
    writer.write_all(&msg.to_frame()).await?;
    writer.flush().await
}
