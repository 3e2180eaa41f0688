use std::collections::BTreeMap;

use ed25519_dalek::SigningKey;
use serde::{Deserialize, Serialize};

use crate::ledger::{ChainState, LedgerError, Transaction, TxDraft, TxKind};

/// Plaintext JSON payload of an achievement transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Achievement {
    pub nickname: String,
    pub level: u32,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeaderboardEntry {
    pub nickname: String,
    pub level: u32,
}

/// Signs an achievement transaction announcing `new_level`.
pub fn on_level_up(
    key: &SigningKey,
    nickname: &str,
    new_level: u32,
    now: u64,
) -> Result<Transaction, LedgerError> {
    let payload = serde_json::to_vec(&Achievement {
        nickname: nickname.to_owned(),
        level: new_level,
        timestamp: now,
    })
    .expect("achievement serializes");
    TxDraft::new(TxKind::Achievement, nickname, payload, now).sign(key)
}

/// Highest announced level per nickname over chain and mempool, sorted by
/// level descending then nickname.
pub fn leaderboard(chain: &ChainState) -> Vec<LeaderboardEntry> {
    let confirmed = chain.blocks().iter().flat_map(|b| b.transactions.iter());
    let mut best: BTreeMap<&str, u32> = BTreeMap::new();
    for tx in confirmed.chain(chain.mempool()) {
        if tx.kind != TxKind::Achievement || !tx.verify() {
            continue;
        }
        let Ok(a) = serde_json::from_slice::<Achievement>(&tx.payload) else {
            continue;
        };
        if a.nickname != tx.author_nick {
            continue;
        }
        let slot = best.entry(tx.author_nick.as_str()).or_insert(0);
        *slot = (*slot).max(a.level);
    }
    let mut out: Vec<LeaderboardEntry> = best
        .into_iter()
        .map(|(nickname, level)| LeaderboardEntry {
            nickname: nickname.to_owned(),
            level,
        })
        .collect();
    out.sort_by(|a, b| b.level.cmp(&a.level).then_with(|| a.nickname.cmp(&b.nickname)));
    out
}
