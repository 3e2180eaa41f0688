//! Chat over the ledger: sessions, encrypted messages, the merged feed and
//! the explorer read-model.

mod cipher;
mod explorer;
mod feed;
mod session;

pub use cipher::{ClassroomKey, KDF_ITERATIONS, NONCE_LEN};
pub use explorer::{
    chain_summary, get_block, get_transaction, peer_table, BlockView, ChainSummaryRow, PeerRow, TxView,
};
pub use feed::{decrypt_text, message_feed, view_message, ChatMessageView, MessageStatus, UNREADABLE};
pub use session::{
    Session, SessionId, SessionTable, MAX_MESSAGE_CHARS, MAX_NICKNAME_CHARS, POST_INTERVAL_MS,
};

use thiserror::Error;

use crate::ledger::{Digest, LedgerError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChatError {
    #[error("nickname must not be empty")]
    EmptyNickname,
    #[error("nickname has {0} characters, limit is 24")]
    NicknameTooLong(usize),
    #[error("message must not be empty")]
    EmptyMessage,
    #[error("message has {0} characters, limit is 512")]
    MessageTooLong(usize),
    #[error("posting too fast, retry in {retry_after_ms} ms")]
    RateLimited { retry_after_ms: u64 },
    #[error("no block at index {0}")]
    BlockNotFound(u64),
    #[error("no transaction {0}")]
    TxNotFound(Digest),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}
