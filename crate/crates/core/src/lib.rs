//! Classroom blockchain chat.
//!
//! Students chat over a real hash-linked, proof-of-work ledger that lives
//! only in the memory of the classroom's nodes. Missions gate what each
//! student can inspect. A separate analytics toolkit gives teachers HITS
//! topic weighting and pretest/posttest statistics.

pub mod analytics;
pub mod chat;
pub mod cli;
pub mod ledger;
pub mod missions;
pub mod node;
pub mod p2p;

/// Milliseconds since the Unix epoch.
pub fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
