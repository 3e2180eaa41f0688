use std::collections::{BTreeMap, BTreeSet};

use ed25519_dalek::SigningKey;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::{ChatError, ClassroomKey};
use crate::ledger::{ChainState, Transaction, TxDraft, TxKind};
use crate::missions::Progress;

pub const MAX_NICKNAME_CHARS: usize = 24;
pub const MAX_MESSAGE_CHARS: usize = 512;
pub const POST_INTERVAL_MS: u64 = 500;

/// Opaque bearer token identifying a session.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl SessionId {
    fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 16];
        rng.fill_bytes(&mut bytes);
        Self(hex::encode(bytes))
    }
}

impl std::fmt::Display for SessionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: SessionId,
    pub nickname: String,
    pub key: SigningKey,
    pub progress: Progress,
    pub last_post_ms: Option<u64>,
}

impl Session {
    pub fn level(&self) -> u32 {
        self.progress.level
    }

    /// Encrypts and signs a chat message. Enforces length and rate limits
    /// and records the post time.
    pub fn post_message<R: RngCore + CryptoRng>(
        &mut self,
        text: &str,
        key: &ClassroomKey,
        now: u64,
        rng: &mut R,
    ) -> Result<Transaction, ChatError> {
        let chars = text.chars().count();
        if text.trim().is_empty() {
            return Err(ChatError::EmptyMessage);
        }
        if chars > MAX_MESSAGE_CHARS {
            return Err(ChatError::MessageTooLong(chars));
        }
        if let Some(last) = self.last_post_ms {
            let elapsed = now.saturating_sub(last);
            if elapsed < POST_INTERVAL_MS {
                return Err(ChatError::RateLimited {
                    retry_after_ms: POST_INTERVAL_MS - elapsed,
                });
            }
        }
        let payload = key.seal(text.as_bytes(), rng);
        let tx = TxDraft::new(TxKind::Chat, &self.nickname, payload, now).sign(&self.key)?;
        self.last_post_ms = Some(now);
        Ok(tx)
    }
}

/// Sessions of the students connected to one node.
#[derive(Debug, Default)]
pub struct SessionTable {
    sessions: BTreeMap<SessionId, Session>,
}

impl SessionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates a session with a fresh keypair. A nickname already used by
    /// a local session or by any author on `chain` gets a `-2`, `-3`, ...
    /// suffix.
    pub fn join<R: RngCore + CryptoRng>(
        &mut self,
        nickname: &str,
        chain: &ChainState,
        rng: &mut R,
    ) -> Result<&Session, ChatError> {
        let base = nickname.trim();
        if base.is_empty() {
            return Err(ChatError::EmptyNickname);
        }
        let chars = base.chars().count();
        if chars > MAX_NICKNAME_CHARS {
            return Err(ChatError::NicknameTooLong(chars));
        }
        let taken = self.taken_nicknames(chain);
        let nickname = unique_nickname(base, &taken);
        let id = SessionId::random(rng);
        let session = Session {
            id: id.clone(),
            nickname,
            key: SigningKey::generate(rng),
            progress: Progress::default(),
            last_post_ms: None,
        };
        Ok(self.sessions.entry(id).or_insert(session))
    }

    fn taken_nicknames(&self, chain: &ChainState) -> BTreeSet<String> {
        let mut taken: BTreeSet<String> = self.sessions.values().map(|s| s.nickname.clone()).collect();
        let confirmed = chain.blocks().iter().skip(1).flat_map(|b| b.transactions.iter());
        taken.extend(confirmed.chain(chain.mempool()).map(|tx| tx.author_nick.clone()));
        taken
    }

    pub fn get(&self, id: &SessionId) -> Option<&Session> {
        self.sessions.get(id)
    }

    pub fn get_mut(&mut self, id: &SessionId) -> Option<&mut Session> {
        self.sessions.get_mut(id)
    }

    pub fn remove(&mut self, id: &SessionId) -> Option<Session> {
        self.sessions.remove(id)
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }
}

fn unique_nickname(base: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_owned();
    }
    (2u64..)
        .map(|n| {
            let suffix = format!("-{n}");
            let room = MAX_NICKNAME_CHARS - suffix.len();
            let stem: String = base.chars().take(room).collect();
            format!("{stem}{suffix}")
        })
        .find(|candidate| !taken.contains(candidate))
        .expect("suffixes are unbounded")
}
