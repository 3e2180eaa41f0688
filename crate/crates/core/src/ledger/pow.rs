//! Proof-of-work search and single-nonce probes.

use serde::Serialize;
use thiserror::Error;

use super::{hash_header, BlockHeader, Digest};

/// Result of hashing a template with one specific nonce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NonceProbe {
    pub digest: Digest,
    pub meets: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mined {
    pub nonce: u64,
    pub digest: Digest,
    /// Hashes computed, counting the successful one.
    pub attempts: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no qualifying nonce in {attempts} attempts starting at {nonce_start}")]
pub struct Exhausted {
    pub nonce_start: u64,
    pub attempts: u64,
}

/// Hashes `template` with `nonce` and checks it against the template's own
/// difficulty. Pure.
pub fn try_nonce(template: &BlockHeader, nonce: u64) -> NonceProbe {
    let mut header = template.clone();
    header.nonce = nonce;
    let digest = hash_header(&header);
    NonceProbe {
        digest,
        meets: digest.meets_difficulty(template.difficulty),
    }
}

/// Sequential nonce search from `nonce_start`, wrapping at `u64::MAX`.
///
/// The search order is fixed, so the same template and start always yield
/// the same nonce.
pub fn mine(template: &BlockHeader, nonce_start: u64, max_attempts: u64) -> Result<Mined, Exhausted> {
    let mut header = template.clone();
    let mut nonce = nonce_start;
    for attempt in 1..=max_attempts.max(1) {
        header.nonce = nonce;
        let digest = hash_header(&header);
        if digest.meets_difficulty(template.difficulty) {
            return Ok(Mined {
                nonce,
                digest,
                attempts: attempt,
            });
        }
        nonce = nonce.wrapping_add(1);
    }
    Err(Exhausted {
        nonce_start,
        attempts: max_attempts.max(1),
    })
}
