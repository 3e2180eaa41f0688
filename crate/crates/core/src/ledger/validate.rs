use std::collections::HashSet;
use std::fmt;

use super::{tx_root, Block, Digest, TxFault, MAX_BLOCK_TRANSACTIONS, MAX_DIFFICULTY};

/// Allowed backwards clock skew between consecutive blocks.
pub const CLOCK_SKEW_MS: u64 = 120_000;

/// The first rule a block breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    GenesisMalformed,
    MissingPrevious,
    IndexMismatch { expected: u64, found: u64 },
    PrevHashMismatch,
    DifficultyMismatch { expected: u32, found: u32 },
    TooManyTransactions(usize),
    TxRootMismatch,
    InsufficientWork { required: u32, found: u32 },
    InvalidTransaction { position: usize, fault: TxFault },
    DuplicateTransaction(Digest),
    TimestampTooEarly,
    EmptyCandidate,
    UnknownParent,
}

impl Violation {
    /// Stable kebab-case rule name.
    pub fn rule(&self) -> &'static str {
        match self {
            Violation::GenesisMalformed => "genesis-malformed",
            Violation::MissingPrevious => "missing-previous",
            Violation::IndexMismatch { .. } => "index-mismatch",
            Violation::PrevHashMismatch => "prev-hash-mismatch",
            Violation::DifficultyMismatch { .. } => "difficulty-mismatch",
            Violation::TooManyTransactions(_) => "too-many-transactions",
            Violation::TxRootMismatch => "tx-root-mismatch",
            Violation::InsufficientWork { .. } => "insufficient-work",
            Violation::InvalidTransaction { .. } => "invalid-transaction",
            Violation::DuplicateTransaction(_) => "duplicate-transaction",
            Violation::TimestampTooEarly => "timestamp-too-early",
            Violation::EmptyCandidate => "empty-candidate",
            Violation::UnknownParent => "unknown-parent",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexMismatch { expected, found } => {
                write!(f, "{}: expected {expected}, found {found}", self.rule())
            }
            Violation::DifficultyMismatch { expected, found } => {
                write!(f, "{}: expected {expected}, found {found}", self.rule())
            }
            Violation::TooManyTransactions(n) => write!(f, "{}: {n}", self.rule()),
            Violation::InsufficientWork { required, found } => {
                write!(f, "{}: need {required} zero bits, have {found}", self.rule())
            }
            Violation::InvalidTransaction { position, fault } => {
                write!(f, "{}: tx {position} ({fault:?})", self.rule())
            }
            Violation::DuplicateTransaction(id) => write!(f, "{}: {id}", self.rule()),
            _ => f.write_str(self.rule()),
        }
    }
}

impl std::error::Error for Violation {}

/// Checks `block` against its predecessor. Rules are evaluated in a fixed
/// order and the first failure is reported.
pub fn validate_block(block: &Block, prev: Option<&Block>) -> Result<(), Violation> {
    let header = &block.header;
    let Some(prev) = prev else {
        let genesis_ok = header.index == 0
            && header.prev_hash.is_zero()
            && block.transactions.is_empty()
            && header.timestamp == 0
            && header.nonce == 0
            && header.difficulty <= MAX_DIFFICULTY
            && header.tx_root == tx_root(&[]);
        return if genesis_ok {
            Ok(())
        } else if header.index != 0 {
            Err(Violation::MissingPrevious)
        } else {
            Err(Violation::GenesisMalformed)
        };
    };

    let expected = prev.header.index + 1;
    if header.index != expected {
        return Err(Violation::IndexMismatch {
            expected,
            found: header.index,
        });
    }
    if header.prev_hash != prev.hash() {
        return Err(Violation::PrevHashMismatch);
    }
    if header.difficulty != prev.header.difficulty {
        return Err(Violation::DifficultyMismatch {
            expected: prev.header.difficulty,
            found: header.difficulty,
        });
    }
    if block.transactions.len() > MAX_BLOCK_TRANSACTIONS {
        return Err(Violation::TooManyTransactions(block.transactions.len()));
    }
    if header.tx_root != tx_root(&block.transactions) {
        return Err(Violation::TxRootMismatch);
    }
    let digest = block.hash();
    if !digest.meets_difficulty(header.difficulty) {
        return Err(Violation::InsufficientWork {
            required: header.difficulty,
            found: digest.leading_zero_bits(),
        });
    }
    let mut ids = HashSet::with_capacity(block.transactions.len());
    for (position, tx) in block.transactions.iter().enumerate() {
        tx.check()
            .map_err(|fault| Violation::InvalidTransaction { position, fault })?;
        if !ids.insert(tx.id) {
            return Err(Violation::DuplicateTransaction(tx.id));
        }
    }
    if header.timestamp < prev.header.timestamp.saturating_sub(CLOCK_SKEW_MS) {
        return Err(Violation::TimestampTooEarly);
    }
    Ok(())
}

/// Validates a whole chain from genesis, including cross-block transaction
/// uniqueness. Returns the failing block index with its violation.
pub fn validate_chain(blocks: &[Block]) -> Result<(), (u64, Violation)> {
    let Some(genesis) = blocks.first() else {
        return Err((0, Violation::EmptyCandidate));
    };
    validate_block(genesis, None).map_err(|v| (0, v))?;
    let mut seen = HashSet::new();
    for pair in blocks.windows(2) {
        let block = &pair[1];
        validate_block(block, Some(&pair[0])).map_err(|v| (block.index(), v))?;
        for tx in &block.transactions {
            if !seen.insert(tx.id) {
                return Err((block.index(), Violation::DuplicateTransaction(tx.id)));
            }
        }
    }
    Ok(())
}
