use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};

use super::codec::{DecodeError, Decoder, Encoder};
use super::{Digest, LedgerError};

/// Upper bound on the payload of any transaction, in bytes.
pub const MAX_PAYLOAD_BYTES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    Chat,
    Achievement,
    System,
}

impl TxKind {
    pub fn tag(self) -> u8 {
        match self {
            TxKind::Chat => 0,
            TxKind::Achievement => 1,
            TxKind::System => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(TxKind::Chat),
            1 => Some(TxKind::Achievement),
            2 => Some(TxKind::System),
            _ => None,
        }
    }
}

/// The signable part of a transaction: everything except `author`, `id` and
/// `signature`, which are filled in by [`TxDraft::sign`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxDraft {
    pub kind: TxKind,
    pub author_nick: String,
    pub payload: Vec<u8>,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: Digest,
    pub kind: TxKind,
    #[serde(with = "hex::serde")]
    pub author: [u8; 32],
    pub author_nick: String,
    #[serde(with = "hex::serde")]
    pub payload: Vec<u8>,
    pub timestamp: u64,
    #[serde(with = "hex::serde")]
    pub signature: [u8; 64],
}

/// Why a transaction fails verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxFault {
    PayloadTooLarge,
    IdMismatch,
    MalformedAuthorKey,
    BadSignature,
}

fn signing_bytes(
    kind: TxKind,
    author: &[u8; 32],
    author_nick: &str,
    payload: &[u8],
    timestamp: u64,
) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.tag(kind.tag())
        .bytes(author)
        .str(author_nick)
        .bytes(payload)
        .u64(timestamp);
    enc.finish()
}

impl TxDraft {
    pub fn new(kind: TxKind, author_nick: impl Into<String>, payload: Vec<u8>, timestamp: u64) -> Self {
        Self {
            kind,
            author_nick: author_nick.into(),
            payload,
            timestamp,
        }
    }

    pub fn sign(self, key: &SigningKey) -> Result<Transaction, LedgerError> {
        if self.payload.len() > MAX_PAYLOAD_BYTES {
            return Err(LedgerError::PayloadTooLarge(self.payload.len()));
        }
        let author = key.verifying_key().to_bytes();
        let msg = signing_bytes(self.kind, &author, &self.author_nick, &self.payload, self.timestamp);
        let signature = key.sign(&msg).to_bytes();
        Ok(Transaction {
            id: Digest::of(&msg),
            kind: self.kind,
            author,
            author_nick: self.author_nick,
            payload: self.payload,
            timestamp: self.timestamp,
            signature,
        })
    }
}

/// Signs with raw 32-byte secret key material.
pub fn sign_transaction(draft: TxDraft, secret_key: &[u8]) -> Result<Transaction, LedgerError> {
    let secret: [u8; 32] = secret_key
        .try_into()
        .map_err(|_| LedgerError::MalformedKey(secret_key.len()))?;
    draft.sign(&SigningKey::from_bytes(&secret))
}

pub fn verify_transaction(tx: &Transaction) -> bool {
    tx.verify()
}

impl Transaction {
    /// The canonical bytes covered by both `id` and `signature`.
    pub fn signing_bytes(&self) -> Vec<u8> {
        signing_bytes(self.kind, &self.author, &self.author_nick, &self.payload, self.timestamp)
    }

    pub fn check(&self) -> Result<(), TxFault> {
        if self.payload.len() > MAX_PAYLOAD_BYTES {
            return Err(TxFault::PayloadTooLarge);
        }
        let msg = self.signing_bytes();
        if Digest::of(&msg) != self.id {
            return Err(TxFault::IdMismatch);
        }
        let key = VerifyingKey::from_bytes(&self.author).map_err(|_| TxFault::MalformedAuthorKey)?;
        let sig = Signature::from_bytes(&self.signature);
        key.verify(&msg, &sig).map_err(|_| TxFault::BadSignature)
    }

    pub fn verify(&self) -> bool {
        self.check().is_ok()
    }

    pub(crate) fn encode_into(&self, enc: &mut Encoder) {
        enc.bytes(self.id.as_bytes())
            .tag(self.kind.tag())
            .bytes(&self.author)
            .str(&self.author_nick)
            .bytes(&self.payload)
            .u64(self.timestamp)
            .bytes(&self.signature);
    }

    pub(crate) fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let id = Digest::from_bytes(dec.fixed::<32>("tx id")?);
        let at = dec.offset();
        let kind = TxKind::from_tag(dec.tag()?).ok_or(DecodeError::Invalid {
            field: "tx kind",
            offset: at,
        })?;
        Ok(Self {
            id,
            kind,
            author: dec.fixed::<32>("author")?,
            author_nick: dec.string("author_nick")?,
            payload: dec.bytes()?.to_vec(),
            timestamp: dec.u64()?,
            signature: dec.fixed::<64>("signature")?,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode_into(&mut enc);
        enc.finish()
    }
}
