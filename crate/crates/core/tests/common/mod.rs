#![allow(dead_code)]

use chunkchain::ledger::{mine, Block, ChainState, Transaction, TxDraft, TxKind};
use ed25519_dalek::SigningKey;

pub fn key(seed: u8) -> SigningKey {
    SigningKey::from_bytes(&[seed; 32])
}

pub fn chat_tx(seed: u8, nick: &str, payload: &[u8], timestamp: u64) -> Transaction {
    TxDraft::new(TxKind::Chat, nick, payload.to_vec(), timestamp)
        .sign(&key(seed))
        .unwrap()
}

/// Mines `template` at its own difficulty.
pub fn seal(template: Block) -> Block {
    let found = mine(&template.header, 0, u64::MAX).expect("difficulty too high for tests");
    template.with_nonce(found.nonce)
}

/// A chain with `blocks` mined blocks after genesis, each carrying
/// `txs_per_block` chat transactions with distinct payloads.
pub fn build_chain(difficulty: u32, blocks: usize, txs_per_block: usize) -> ChainState {
    let mut chain = ChainState::new("fixture", difficulty).unwrap();
    for b in 0..blocks {
        for t in 0..txs_per_block {
            let payload = format!("block {b} message {t}: the quick brown fox");
            let tx = chat_tx((t % 7 + 1) as u8, "student", payload.as_bytes(), 1_000 * b as u64 + t as u64);
            chain.mempool_add(tx).unwrap();
        }
        let template = chain.block_template("miner", 10_000 + 1_000 * b as u64);
        chain.extend(seal(template)).unwrap();
    }
    chain
}

pub mod oracle;
pub mod client;
pub mod progress;
pub mod samples;
pub mod sim;
