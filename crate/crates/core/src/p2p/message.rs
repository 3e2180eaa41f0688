use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ledger::{Block, Digest, Transaction};

/// Maximum number of blocks in one CHAIN_RESPONSE page.
pub const SYNC_PAGE: usize = 32;

/// A node's identity on the wire: its advertised `host:port`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerMessage {
    pub sender_id: NodeId,
    #[serde(flatten)]
    pub body: MessageBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageBody {
    Hello {
        classroom_name: String,
        genesis_hash: Digest,
        tip_index: u64,
    },
    Peers {
        addresses: Vec<NodeId>,
    },
    TxGossip {
        transaction: Transaction,
    },
    BlockGossip {
        block: Block,
    },
    ChainRequest {
        from_index: u64,
        to_index: u64,
    },
    ChainResponse {
        blocks: Vec<Block>,
    },
    Ping {},
    Pong {},
}

impl MessageBody {
    pub fn type_name(&self) -> &'static str {
        match self {
            MessageBody::Hello { .. } => "HELLO",
            MessageBody::Peers { .. } => "PEERS",
            MessageBody::TxGossip { .. } => "TX_GOSSIP",
            MessageBody::BlockGossip { .. } => "BLOCK_GOSSIP",
            MessageBody::ChainRequest { .. } => "CHAIN_REQUEST",
            MessageBody::ChainResponse { .. } => "CHAIN_RESPONSE",
            MessageBody::Ping {} => "PING",
            MessageBody::Pong {} => "PONG",
        }
    }
}

/// Structural problems that make a decoded message unusable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Malformed {
    EmptySender,
    InvertedRange,
    OversizedResponse(usize),
    NonContiguousResponse,
}

impl PeerMessage {
    pub fn new(sender_id: NodeId, body: MessageBody) -> Self {
        Self { sender_id, body }
    }

    pub fn check(&self) -> Result<(), Malformed> {
        if self.sender_id.0.is_empty() {
            return Err(Malformed::EmptySender);
        }
        match &self.body {
            MessageBody::ChainRequest { from_index, to_index } if from_index > to_index => {
                Err(Malformed::InvertedRange)
            }
            MessageBody::ChainResponse { blocks } => {
                if blocks.len() > SYNC_PAGE {
                    return Err(Malformed::OversizedResponse(blocks.len()));
                }
                let contiguous = blocks
                    .windows(2)
                    .all(|w| w[1].header.index == w[0].header.index + 1);
                if contiguous {
                    Ok(())
                } else {
                    Err(Malformed::NonContiguousResponse)
                }
            }
            _ => Ok(()),
        }
    }
}

/// UDP discovery datagram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Beacon {
    pub classroom_name: String,
    pub listen_addr: NodeId,
}
