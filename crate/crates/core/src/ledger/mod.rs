//! Deterministic blockchain core: transactions, blocks, hashing,
//! proof-of-work, validation and fork choice.
//!
//! Everything here is a plain value or a pure function over values. The
//! node owns the single mutable [`ChainState`] and replaces it wholesale.

mod block;
mod chain;
pub mod codec;
mod digest;
mod pow;
mod transaction;
mod validate;

pub use block::{
    hash_header, make_genesis, tx_root, Block, BlockHeader, MAX_BLOCK_TRANSACTIONS, MAX_DIFFICULTY,
};
pub use chain::{select_chain, ChainState, Selection, TxLocation};
pub use digest::Digest;
pub use pow::{mine, try_nonce, Exhausted, Mined, NonceProbe};
pub use transaction::{
    sign_transaction, verify_transaction, Transaction, TxDraft, TxFault, TxKind, MAX_PAYLOAD_BYTES,
};
pub use validate::{validate_block, validate_chain, Violation, CLOCK_SKEW_MS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("difficulty {0} outside 0..=32")]
    DifficultyOutOfRange(u32),
    #[error("payload of {0} bytes exceeds the 4096-byte limit")]
    PayloadTooLarge(usize),
    #[error("secret key must be 32 bytes, got {0}")]
    MalformedKey(usize),
    #[error("transaction failed verification: {0:?}")]
    InvalidTransaction(TxFault),
}
