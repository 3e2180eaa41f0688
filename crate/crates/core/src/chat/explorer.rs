use serde::Serialize;

use super::{decrypt_text, ChatError, ClassroomKey, UNREADABLE};
use crate::ledger::{Block, ChainState, Digest, Transaction, TxKind};
use crate::p2p::PeerState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TxView {
    pub id: Digest,
    pub kind: TxKind,
    pub author: String,
    pub author_nick: String,
    pub timestamp: u64,
    /// Raw payload bytes as hex (nonce followed by ciphertext for chat).
    pub ciphertext: String,
    /// Decrypted chat text, or the plaintext payload of other kinds.
    pub plaintext: String,
    pub signature: String,
    /// `None` while pending.
    pub block_index: Option<u64>,
    pub position: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockView {
    pub index: u64,
    pub hash: Digest,
    pub prev_hash: Digest,
    pub tx_root: Digest,
    pub timestamp: u64,
    pub difficulty: u32,
    pub nonce: u64,
    pub miner_nick: String,
    pub transactions: Vec<Digest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainSummaryRow {
    pub index: u64,
    pub hash: Digest,
    pub prev_hash: Digest,
    pub nonce: u64,
    pub difficulty: u32,
    pub tx_count: usize,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeerRow {
    pub address: String,
    pub last_seen: u64,
    pub tip_index: u64,
}

impl From<&Block> for BlockView {
    fn from(b: &Block) -> Self {
        Self {
            index: b.header.index,
            hash: b.hash(),
            prev_hash: b.header.prev_hash,
            tx_root: b.header.tx_root,
            timestamp: b.header.timestamp,
            difficulty: b.header.difficulty,
            nonce: b.header.nonce,
            miner_nick: b.header.miner_nick.clone(),
            transactions: b.transactions.iter().map(|t| t.id).collect(),
        }
    }
}

pub fn get_block(chain: &ChainState, index: u64) -> Result<BlockView, ChatError> {
    chain
        .block(index)
        .map(BlockView::from)
        .ok_or(ChatError::BlockNotFound(index))
}

pub fn get_transaction(chain: &ChainState, id: &Digest, key: &ClassroomKey) -> Result<TxView, ChatError> {
    let (tx, location) = match chain.confirmed_tx(id) {
        Some((tx, loc)) => (tx, Some(loc)),
        None => (chain.mempool_get(id).ok_or(ChatError::TxNotFound(*id))?, None),
    };
    Ok(TxView {
        id: tx.id,
        kind: tx.kind,
        author: hex::encode(tx.author),
        author_nick: tx.author_nick.clone(),
        timestamp: tx.timestamp,
        ciphertext: hex::encode(&tx.payload),
        plaintext: plaintext_of(tx, key),
        signature: hex::encode(tx.signature),
        block_index: location.map(|l| l.block_index),
        position: location.map(|l| l.position),
    })
}

fn plaintext_of(tx: &Transaction, key: &ClassroomKey) -> String {
    let text = match tx.kind {
        TxKind::Chat => decrypt_text(tx, key),
        TxKind::Achievement | TxKind::System => String::from_utf8(tx.payload.clone()).ok(),
    };
    text.unwrap_or_else(|| UNREADABLE.to_owned())
}

pub fn chain_summary(chain: &ChainState) -> Vec<ChainSummaryRow> {
    chain
        .blocks()
        .iter()
        .map(|b| ChainSummaryRow {
            index: b.header.index,
            hash: b.hash(),
            prev_hash: b.header.prev_hash,
            nonce: b.header.nonce,
            difficulty: b.header.difficulty,
            tx_count: b.transactions.len(),
            timestamp: b.header.timestamp,
        })
        .collect()
}

pub fn peer_table(peers: &PeerState) -> Vec<PeerRow> {
    peers
        .peers
        .iter()
        .map(|(addr, info)| PeerRow {
            address: addr.to_string(),
            last_seen: info.last_seen,
            tip_index: info.tip_index,
        })
        .collect()
}
