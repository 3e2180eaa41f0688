use crate::ledger::{select_chain, Block, ChainState, LedgerError, Transaction, Violation};

use super::state::{BEACON_INTERVAL_MS, PEER_TIMEOUT_MS, PING_INTERVAL_MS, SYNC_RETRY_MS};
use super::{Beacon, MessageBody, NodeId, PeerMessage, PeerState, SyncRequest, SYNC_PAGE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outbound {
    pub to: NodeId,
    pub msg: PeerMessage,
}

/// Everything a single protocol step produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reaction {
    pub outbound: Vec<Outbound>,
    /// Transactions newly admitted to the mempool.
    pub new_transactions: Vec<Transaction>,
    /// Tip changed (extension or reorg).
    pub chain_changed: bool,
    /// Blocks dropped from the local chain by a reorg.
    pub abandoned: Vec<Block>,
    pub peers_changed: bool,
}

impl Reaction {
    fn send(&mut self, to: NodeId, msg: PeerMessage) {
        self.outbound.push(Outbound { to, msg });
    }

    fn merge(&mut self, other: Reaction) {
        self.outbound.extend(other.outbound);
        self.new_transactions.extend(other.new_transactions);
        self.chain_changed |= other.chain_changed;
        self.abandoned.extend(other.abandoned);
        self.peers_changed |= other.peers_changed;
    }
}

/// A node's chain plus its protocol bookkeeping.
///
/// All methods are deterministic functions of the current state and their
/// arguments; time is always passed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolNode {
    pub chain: ChainState,
    pub peers: PeerState,
}

/// Functional form of [`ProtocolNode::handle_message`].
pub fn handle_message(
    chain: &ChainState,
    peers: &PeerState,
    msg: PeerMessage,
    now: u64,
) -> (ChainState, PeerState, Vec<Outbound>) {
    let mut node = ProtocolNode {
        chain: chain.clone(),
        peers: peers.clone(),
    };
    let reaction = node.handle_message(msg, now);
    (node.chain, node.peers, reaction.outbound)
}

impl ProtocolNode {
    pub fn new(self_id: NodeId, chain: ChainState) -> Self {
        let genesis = chain.genesis();
        let peers = PeerState::new(self_id, genesis.header.miner_nick.clone(), genesis.hash());
        Self { chain, peers }
    }

    pub fn id(&self) -> &NodeId {
        &self.peers.self_id
    }

    fn envelope(&self, body: MessageBody) -> PeerMessage {
        PeerMessage::new(self.peers.self_id.clone(), body)
    }

    fn hello(&self) -> PeerMessage {
        self.envelope(MessageBody::Hello {
            classroom_name: self.peers.classroom_name.clone(),
            genesis_hash: self.peers.genesis_hash,
            tip_index: self.chain.tip_index(),
        })
    }

    fn broadcast(&self, reaction: &mut Reaction, body: MessageBody, except: Option<&NodeId>) {
        for peer in self.peers.peer_ids() {
            if Some(peer) != except {
                reaction.send(peer.clone(), self.envelope(body.clone()));
            }
        }
    }

    /// Sends HELLO to a statically configured or discovered address.
    pub fn connect(&mut self, addr: NodeId, now: u64) -> Reaction {
        let mut reaction = Reaction::default();
        if addr == self.peers.self_id || self.peers.is_peer(&addr) {
            return reaction;
        }
        self.peers.hello_sent.insert(addr.clone(), now);
        reaction.send(addr, self.hello());
        reaction
    }

    /// Admits a locally created transaction and gossips it.
    pub fn submit_transaction(&mut self, tx: Transaction) -> Result<Reaction, LedgerError> {
        let mut reaction = Reaction::default();
        if self.chain.mempool_add(tx.clone())? {
            self.peers.seen_tx.insert(tx.id);
            self.broadcast(&mut reaction, MessageBody::TxGossip { transaction: tx.clone() }, None);
            reaction.new_transactions.push(tx);
        }
        Ok(reaction)
    }

    /// Appends a locally mined block and gossips it.
    pub fn announce_block(&mut self, block: Block) -> Result<Reaction, Violation> {
        self.chain.extend(block.clone())?;
        self.peers.seen_block.insert(block.hash());
        let mut reaction = Reaction {
            chain_changed: true,
            ..Reaction::default()
        };
        self.broadcast(&mut reaction, MessageBody::BlockGossip { block }, None);
        Ok(reaction)
    }

    /// A frame from `from` could not be decoded.
    pub fn handle_malformed(&mut self, from: &NodeId) -> Reaction {
        Reaction {
            peers_changed: self.peers.strike(from),
            ..Reaction::default()
        }
    }

    fn accepts_from(&self, id: &NodeId) -> bool {
        self.peers.is_peer(id) || self.peers.hello_sent.contains_key(id)
    }

    pub fn handle_message(&mut self, msg: PeerMessage, now: u64) -> Reaction {
        let mut reaction = Reaction::default();
        let sender = msg.sender_id.clone();
        if sender == self.peers.self_id {
            return reaction;
        }
        if msg.check().is_err() {
            reaction.peers_changed = self.peers.strike(&sender);
            return reaction;
        }
        self.peers.touch(&sender, now);

        match msg.body {
            MessageBody::Hello {
                classroom_name,
                genesis_hash,
                tip_index,
            } => {
                if genesis_hash != self.peers.genesis_hash
                    || classroom_name != self.peers.classroom_name
                {
                    self.peers.hello_sent.remove(&sender);
                    reaction.peers_changed = self.peers.peers.remove(&sender).is_some();
                    return reaction;
                }
                reaction.peers_changed = self.peers.add_peer(sender.clone(), tip_index, now);
                let addresses = self
                    .peers
                    .peer_ids()
                    .filter(|id| **id != sender)
                    .cloned()
                    .collect();
                reaction.send(sender.clone(), self.envelope(MessageBody::Peers { addresses }));
                let ours = self.chain.tip_index();
                if tip_index > ours {
                    self.request_range(&mut reaction, &sender, ours + 1, tip_index, now);
                } else if tip_index < ours {
                    let block = self.chain.tip().clone();
                    reaction.send(sender, self.envelope(MessageBody::BlockGossip { block }));
                }
            }
            MessageBody::Peers { addresses } => {
                if !self.accepts_from(&sender) {
                    return reaction;
                }
                if self.peers.hello_sent.contains_key(&sender) {
                    reaction.peers_changed |= self.peers.add_peer(sender.clone(), 0, now);
                }
                for addr in addresses {
                    let recently_greeted = self
                        .peers
                        .hello_sent
                        .get(&addr)
                        .is_some_and(|&at| now.saturating_sub(at) < BEACON_INTERVAL_MS);
                    if !recently_greeted {
                        reaction.merge(self.connect(addr, now));
                    }
                }
            }
            MessageBody::TxGossip { transaction } => {
                if !self.accepts_from(&sender) || !self.peers.seen_tx.insert(transaction.id) {
                    return reaction;
                }
                if self.chain.knows_tx(&transaction.id) {
                    return reaction;
                }
                match self.chain.mempool_add(transaction.clone()) {
                    Ok(true) => {
                        self.broadcast(
                            &mut reaction,
                            MessageBody::TxGossip {
                                transaction: transaction.clone(),
                            },
                            Some(&sender),
                        );
                        reaction.new_transactions.push(transaction);
                    }
                    Ok(false) => {}
                    Err(_) => reaction.peers_changed = self.peers.strike(&sender),
                }
            }
            MessageBody::BlockGossip { block } => {
                if !self.accepts_from(&sender) || !self.peers.seen_block.insert(block.hash()) {
                    return reaction;
                }
                if let Some(info) = self.peers.peers.get_mut(&sender) {
                    info.tip_index = info.tip_index.max(block.header.index);
                }
                self.absorb_blocks(&mut reaction, vec![block], &sender, now);
                if reaction.chain_changed {
                    let block = self.chain.tip().clone();
                    self.broadcast(&mut reaction, MessageBody::BlockGossip { block }, Some(&sender));
                }
            }
            MessageBody::ChainRequest {
                from_index,
                to_index,
            } => {
                if !self.peers.is_peer(&sender) {
                    return reaction;
                }
                let to = to_index
                    .min(self.chain.tip_index())
                    .min(from_index.saturating_add(SYNC_PAGE as u64 - 1));
                let blocks = if from_index > to {
                    Vec::new()
                } else {
                    (from_index..=to)
                        .filter_map(|i| self.chain.block(i).cloned())
                        .collect()
                };
                reaction.send(sender, self.envelope(MessageBody::ChainResponse { blocks }));
            }
            MessageBody::ChainResponse { blocks } => {
                if !self.accepts_from(&sender) {
                    return reaction;
                }
                if self
                    .peers
                    .pending_sync
                    .as_ref()
                    .is_some_and(|p| p.peer == sender)
                {
                    self.peers.pending_sync = None;
                }
                for b in &blocks {
                    self.peers.seen_block.insert(b.hash());
                }
                let before = self.chain.tip_hash();
                self.absorb_blocks(&mut reaction, blocks, &sender, now);
                if self.chain.tip_hash() != before {
                    let block = self.chain.tip().clone();
                    self.broadcast(&mut reaction, MessageBody::BlockGossip { block }, Some(&sender));
                }
            }
            MessageBody::Ping {} => {
                if self.peers.is_peer(&sender) {
                    reaction.send(sender, self.envelope(MessageBody::Pong {}));
                }
            }
            MessageBody::Pong {} => {}
        }
        reaction
    }

    /// Files incoming blocks, then tries to attach the highest one to the
    /// local chain through the orphan pool. Missing ancestors are requested
    /// from `from`.
    fn absorb_blocks(&mut self, reaction: &mut Reaction, blocks: Vec<Block>, from: &NodeId, now: u64) {
        let mut top: Option<Block> = None;
        for block in blocks {
            let known = self
                .chain
                .block(block.header.index)
                .is_some_and(|b| b.hash() == block.hash());
            if known {
                continue;
            }
            if top.as_ref().map_or(true, |t| block.header.index >= t.header.index) {
                top = Some(block.clone());
            }
            self.peers.orphans.insert(block);
        }
        let Some(top) = top else {
            return;
        };

        let mut branch = vec![top];
        loop {
            let cur = branch.last().unwrap();
            if cur.header.index == 0 {
                // A foreign genesis never attaches.
                reaction.peers_changed |= self.peers.strike(from);
                return;
            }
            let parent_index = cur.header.index - 1;
            let attached = self
                .chain
                .block(parent_index)
                .is_some_and(|b| b.hash() == cur.header.prev_hash);
            if attached {
                break;
            }
            match self.peers.orphans.get(&cur.header.prev_hash) {
                Some(parent) if parent.header.index == parent_index => branch.push(parent.clone()),
                _ => {
                    let to = cur.header.index;
                    let tip = self.chain.tip_index();
                    let floor = if parent_index > tip { tip + 1 } else { 1 };
                    let from_index = floor.max(to.saturating_sub(SYNC_PAGE as u64 - 1));
                    self.request_range(reaction, from, from_index, to, now);
                    return;
                }
            }
        }
        branch.reverse();

        match select_chain(&self.chain, &branch) {
            Ok(sel) if sel.adopted => {
                self.chain = sel.state;
                reaction.chain_changed = true;
                reaction.abandoned.extend(sel.abandoned);
                self.extend_from_orphans(reaction);
            }
            Ok(_) => {}
            Err(_) => reaction.peers_changed |= self.peers.strike(from),
        }
    }

    /// Follows orphans that build directly on the new tip.
    fn extend_from_orphans(&mut self, reaction: &mut Reaction) {
        loop {
            let tip = self.chain.tip_hash();
            let next_index = self.chain.tip_index() + 1;
            let Some(child) = self.peers.orphans.children_of(&tip, next_index) else {
                break;
            };
            if self.chain.extend(child).is_err() {
                break;
            }
            reaction.chain_changed = true;
        }
    }

    fn request_range(&mut self, reaction: &mut Reaction, peer: &NodeId, from_index: u64, to_index: u64, now: u64) {
        let to_index = to_index.min(from_index + SYNC_PAGE as u64 - 1);
        let duplicate = self.peers.pending_sync.as_ref().is_some_and(|p| {
            p.peer == *peer
                && p.from_index == from_index
                && p.to_index == to_index
                && now.saturating_sub(p.requested_at) < SYNC_RETRY_MS
        });
        if duplicate {
            return;
        }
        self.peers.pending_sync = Some(SyncRequest {
            peer: peer.clone(),
            from_index,
            to_index,
            requested_at: now,
        });
        reaction.send(
            peer.clone(),
            self.envelope(MessageBody::ChainRequest {
                from_index,
                to_index,
            }),
        );
    }

    /// Liveness housekeeping: evicts silent peers and pings quiet ones.
    pub fn tick(&mut self, now: u64) -> Reaction {
        let mut reaction = Reaction::default();
        let before = self.peers.peers.len();
        self.peers
            .peers
            .retain(|_, info| now.saturating_sub(info.last_seen) <= PEER_TIMEOUT_MS);
        reaction.peers_changed = self.peers.peers.len() != before;
        self.peers
            .hello_sent
            .retain(|_, at| now.saturating_sub(*at) <= PEER_TIMEOUT_MS);
        if self
            .peers
            .pending_sync
            .as_ref()
            .is_some_and(|p| now.saturating_sub(p.requested_at) >= SYNC_RETRY_MS)
        {
            self.peers.pending_sync = None;
        }
        let due: Vec<NodeId> = self
            .peers
            .peers
            .iter()
            .filter(|(_, info)| now.saturating_sub(info.last_ping) >= PING_INTERVAL_MS)
            .map(|(id, _)| id.clone())
            .collect();
        for id in due {
            if let Some(info) = self.peers.peers.get_mut(&id) {
                info.last_ping = now;
            }
            reaction.send(id, self.envelope(MessageBody::Ping {}));
        }
        reaction
    }

    /// Emits a discovery beacon when one is due.
    pub fn discovery_tick(&mut self, now: u64) -> Option<Beacon> {
        let due = self
            .peers
            .last_beacon
            .map_or(true, |at| now.saturating_sub(at) >= BEACON_INTERVAL_MS);
        if !due {
            return None;
        }
        self.peers.last_beacon = Some(now);
        Some(Beacon {
            classroom_name: self.peers.classroom_name.clone(),
            listen_addr: self.peers.self_id.clone(),
        })
    }

    /// Reacts to a beacon heard on the LAN.
    pub fn on_beacon(&mut self, beacon: &Beacon, now: u64) -> Reaction {
        if beacon.classroom_name != self.peers.classroom_name
            || beacon.listen_addr == self.peers.self_id
            || self.peers.is_peer(&beacon.listen_addr)
        {
            return Reaction::default();
        }
        let recently_greeted = self
            .peers
            .hello_sent
            .get(&beacon.listen_addr)
            .is_some_and(|&at| now.saturating_sub(at) < BEACON_INTERVAL_MS);
        if recently_greeted {
            return Reaction::default();
        }
        self.connect(beacon.listen_addr.clone(), now)
    }
}
