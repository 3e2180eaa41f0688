use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::Serialize;

use super::NodeId;
use crate::ledger::{Block, Digest};

pub const SEEN_CAPACITY: usize = 4096;
pub const ORPHAN_CAPACITY: usize = 256;
pub const PEER_TIMEOUT_MS: u64 = 30_000;
pub const PING_INTERVAL_MS: u64 = 10_000;
pub const BEACON_INTERVAL_MS: u64 = 5_000;
pub const SYNC_RETRY_MS: u64 = 2_000;
pub const MAX_STRIKES: u32 = 3;

/// Recently seen ids with FIFO eviction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeenCache {
    capacity: usize,
    order: VecDeque<Digest>,
    members: HashSet<Digest>,
}

impl SeenCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            order: VecDeque::with_capacity(capacity.min(1024)),
            members: HashSet::new(),
        }
    }

    pub fn contains(&self, id: &Digest) -> bool {
        self.members.contains(id)
    }

    /// Returns `false` if the id was already present.
    pub fn insert(&mut self, id: Digest) -> bool {
        if !self.members.insert(id) {
            return false;
        }
        self.order.push_back(id);
        if self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.members.remove(&old);
            }
        }
        true
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Blocks received ahead of their ancestors, keyed by hash.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrphanPool {
    order: VecDeque<Digest>,
    blocks: HashMap<Digest, Block>,
}

impl OrphanPool {
    pub fn insert(&mut self, block: Block) {
        let hash = block.hash();
        if self.blocks.insert(hash, block).is_none() {
            self.order.push_back(hash);
            if self.order.len() > ORPHAN_CAPACITY {
                if let Some(old) = self.order.pop_front() {
                    self.blocks.remove(&old);
                }
            }
        }
    }

    pub fn get(&self, hash: &Digest) -> Option<&Block> {
        self.blocks.get(hash)
    }

    /// The smallest-hash orphan at `index` whose parent is `parent`.
    pub fn children_of(&self, parent: &Digest, index: u64) -> Option<Block> {
        self.blocks
            .iter()
            .filter(|(_, b)| b.header.prev_hash == *parent && b.header.index == index)
            .min_by_key(|(hash, _)| **hash)
            .map(|(_, b)| b.clone())
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeerInfo {
    pub last_seen: u64,
    pub tip_index: u64,
    #[serde(skip)]
    pub last_ping: u64,
    pub strikes: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyncRequest {
    pub peer: NodeId,
    pub from_index: u64,
    pub to_index: u64,
    pub requested_at: u64,
}

/// Per-node protocol bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerState {
    pub self_id: NodeId,
    pub classroom_name: String,
    pub genesis_hash: Digest,
    pub peers: BTreeMap<NodeId, PeerInfo>,
    pub seen_tx: SeenCache,
    pub seen_block: SeenCache,
    pub pending_sync: Option<SyncRequest>,
    pub orphans: OrphanPool,
    /// HELLOs we sent and are waiting to have answered.
    pub hello_sent: BTreeMap<NodeId, u64>,
    pub last_beacon: Option<u64>,
}

impl PeerState {
    pub fn new(self_id: NodeId, classroom_name: impl Into<String>, genesis_hash: Digest) -> Self {
        Self {
            self_id,
            classroom_name: classroom_name.into(),
            genesis_hash,
            peers: BTreeMap::new(),
            seen_tx: SeenCache::new(SEEN_CAPACITY),
            seen_block: SeenCache::new(SEEN_CAPACITY),
            pending_sync: None,
            orphans: OrphanPool::default(),
            hello_sent: BTreeMap::new(),
            last_beacon: None,
        }
    }

    pub fn is_peer(&self, id: &NodeId) -> bool {
        self.peers.contains_key(id)
    }

    pub(crate) fn add_peer(&mut self, id: NodeId, tip_index: u64, now: u64) -> bool {
        if id == self.self_id {
            return false;
        }
        self.hello_sent.remove(&id);
        match self.peers.get_mut(&id) {
            Some(info) => {
                info.last_seen = now;
                info.tip_index = info.tip_index.max(tip_index);
                false
            }
            None => {
                self.peers.insert(
                    id,
                    PeerInfo {
                        last_seen: now,
                        tip_index,
                        last_ping: now,
                        strikes: 0,
                    },
                );
                true
            }
        }
    }

    pub(crate) fn touch(&mut self, id: &NodeId, now: u64) {
        if let Some(info) = self.peers.get_mut(id) {
            info.last_seen = info.last_seen.max(now);
        }
    }

    /// Records a strike; evicts the peer on the third. Returns `true` on eviction.
    pub(crate) fn strike(&mut self, id: &NodeId) -> bool {
        let Some(info) = self.peers.get_mut(id) else {
            return false;
        };
        info.strikes += 1;
        if info.strikes >= MAX_STRIKES {
            self.peers.remove(id);
            true
        } else {
            false
        }
    }

    pub fn peer_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.peers.keys()
    }
}
