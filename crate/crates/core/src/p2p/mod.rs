//! Peer discovery, gossip and chain sync.
//!
//! [`ProtocolNode`] is a pure state machine: messages and clock readings go
//! in, outbound messages come out. The TCP/UDP transport in `node` and the
//! deterministic [`sim`] harness both drive it the same way.

mod message;
mod protocol;
pub mod sim;
mod state;
pub mod wire;

pub use message::{Beacon, Malformed, MessageBody, NodeId, PeerMessage, SYNC_PAGE};
pub use protocol::{handle_message, Outbound, ProtocolNode, Reaction};
pub use state::{
    OrphanPool, PeerInfo, PeerState, SeenCache, SyncRequest, BEACON_INTERVAL_MS, MAX_STRIKES,
    ORPHAN_CAPACITY, PEER_TIMEOUT_MS, PING_INTERVAL_MS, SEEN_CAPACITY, SYNC_RETRY_MS,
};
