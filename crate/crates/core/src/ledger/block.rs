use serde::{Deserialize, Serialize};

use super::codec::{DecodeError, Decoder, Encoder};
use super::{Digest, LedgerError, Transaction};

pub const MAX_BLOCK_TRANSACTIONS: usize = 64;
pub const MAX_DIFFICULTY: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub index: u64,
    pub prev_hash: Digest,
    pub tx_root: Digest,
    pub timestamp: u64,
    pub difficulty: u32,
    pub nonce: u64,
    pub miner_nick: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
}

impl BlockHeader {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode_into(&mut enc);
        enc.finish()
    }

    fn encode_into(&self, enc: &mut Encoder) {
        enc.u64(self.index)
            .bytes(self.prev_hash.as_bytes())
            .bytes(self.tx_root.as_bytes())
            .u64(self.timestamp)
            .u64(u64::from(self.difficulty))
            .u64(self.nonce)
            .str(&self.miner_nick);
    }

    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let index = dec.u64()?;
        let prev_hash = Digest::from_bytes(dec.fixed::<32>("prev_hash")?);
        let tx_root = Digest::from_bytes(dec.fixed::<32>("tx_root")?);
        let timestamp = dec.u64()?;
        let at = dec.offset();
        let difficulty = u32::try_from(dec.u64()?).map_err(|_| DecodeError::Invalid {
            field: "difficulty",
            offset: at,
        })?;
        Ok(Self {
            index,
            prev_hash,
            tx_root,
            timestamp,
            difficulty,
            nonce: dec.u64()?,
            miner_nick: dec.string("miner_nick")?,
        })
    }

    pub fn hash(&self) -> Digest {
        hash_header(self)
    }
}

/// SHA-256 over the canonical header serialization.
pub fn hash_header(header: &BlockHeader) -> Digest {
    Digest::of(&header.canonical_bytes())
}

/// Hash of the concatenated transaction ids, in block order.
pub fn tx_root(transactions: &[Transaction]) -> Digest {
    let mut ids = Vec::with_capacity(transactions.len() * Digest::LEN);
    for tx in transactions {
        ids.extend_from_slice(tx.id.as_bytes());
    }
    Digest::of(&ids)
}

/// The deterministic first block of a classroom chain.
///
/// Every node configured with the same name and difficulty produces a
/// bit-identical genesis, so no clock agreement is needed.
pub fn make_genesis(classroom_name: &str, difficulty: u32) -> Result<Block, LedgerError> {
    if difficulty > MAX_DIFFICULTY {
        return Err(LedgerError::DifficultyOutOfRange(difficulty));
    }
    Ok(Block {
        header: BlockHeader {
            index: 0,
            prev_hash: Digest::ZERO,
            tx_root: tx_root(&[]),
            timestamp: 0,
            difficulty,
            nonce: 0,
            miner_nick: classroom_name.to_owned(),
        },
        transactions: Vec::new(),
    })
}

impl Block {
    pub fn hash(&self) -> Digest {
        self.header.hash()
    }

    pub fn index(&self) -> u64 {
        self.header.index
    }

    /// A header-and-transactions template on top of `prev`; the nonce is left
    /// at zero for the miner to fill in.
    pub fn template(
        prev: &Block,
        transactions: Vec<Transaction>,
        timestamp: u64,
        difficulty: u32,
        miner_nick: impl Into<String>,
    ) -> Block {
        Block {
            header: BlockHeader {
                index: prev.header.index + 1,
                prev_hash: prev.hash(),
                tx_root: tx_root(&transactions),
                timestamp,
                difficulty,
                nonce: 0,
                miner_nick: miner_nick.into(),
            },
            transactions,
        }
    }

    pub fn with_nonce(mut self, nonce: u64) -> Block {
        self.header.nonce = nonce;
        self
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.header.encode_into(&mut enc);
        enc.count(self.transactions.len());
        for tx in &self.transactions {
            tx.encode_into(&mut enc);
        }
        enc.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Block, DecodeError> {
        let mut dec = Decoder::new(data);
        let header = BlockHeader::decode_from(&mut dec)?;
        let at = dec.offset();
        let n = dec.count()?;
        if n > MAX_BLOCK_TRANSACTIONS {
            return Err(DecodeError::Invalid {
                field: "transaction count",
                offset: at,
            });
        }
        let mut transactions = Vec::with_capacity(n);
        for _ in 0..n {
            transactions.push(Transaction::decode_from(&mut dec)?);
        }
        dec.finish()?;
        Ok(Block { header, transactions })
    }
}
