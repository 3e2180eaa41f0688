use serde::Serialize;

use super::ClassroomKey;
use crate::ledger::{ChainState, Digest, Transaction, TxKind};

/// Shown in place of a payload that does not decrypt under the local key.
pub const UNREADABLE: &str = "[unreadable]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum MessageStatus {
    Pending,
    Confirmed { block_index: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChatMessageView {
    pub tx_id: Digest,
    pub nickname: String,
    pub plaintext: String,
    pub timestamp: u64,
    pub status: MessageStatus,
}

/// Decrypted chat text, or `None` if the payload does not open.
pub fn decrypt_text(tx: &Transaction, key: &ClassroomKey) -> Option<String> {
    key.open(&tx.payload).and_then(|bytes| String::from_utf8(bytes).ok())
}

/// `None` for non-chat or unverifiable transactions.
pub fn view_message(tx: &Transaction, status: MessageStatus, key: &ClassroomKey) -> Option<ChatMessageView> {
    if tx.kind != TxKind::Chat || !tx.verify() {
        return None;
    }
    Some(ChatMessageView {
        tx_id: tx.id,
        nickname: tx.author_nick.clone(),
        plaintext: decrypt_text(tx, key).unwrap_or_else(|| UNREADABLE.to_owned()),
        timestamp: tx.timestamp,
        status,
    })
}

/// Confirmed chat messages in chain order, then pending ones by
/// `(timestamp, id)`.
pub fn message_feed(chain: &ChainState, key: &ClassroomKey) -> Vec<ChatMessageView> {
    let mut feed = Vec::new();
    for block in chain.blocks() {
        let status = MessageStatus::Confirmed {
            block_index: block.header.index,
        };
        feed.extend(block.transactions.iter().filter_map(|tx| view_message(tx, status, key)));
    }
    feed.extend(chain.pending_sorted().into_iter().filter_map(|tx| view_message(tx, MessageStatus::Pending, key)));
    feed
}
