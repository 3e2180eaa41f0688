//! Deterministic network simulator.
//!
//! Events are processed in `(time, sequence)` order from a single queue.
//! Latency and drops come from a seeded ChaCha RNG, so a seed fully
//! determines the run.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Beacon, NodeId, PeerMessage, ProtocolNode, Reaction};
use crate::ledger::{mine, Block, Digest, Transaction, MAX_BLOCK_TRANSACTIONS};

/// Upper bound on processed events before a run is declared non-quiescent.
pub const DEFAULT_EVENT_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub min_latency_ms: u64,
    pub max_latency_ms: u64,
    /// Probability in `[0, 1]` that a message is lost.
    pub drop_probability: f64,
}

impl Default for NetworkModel {
    fn default() -> Self {
        Self {
            min_latency_ms: 5,
            max_latency_ms: 50,
            drop_probability: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// `node` sends HELLO to `peer`.
    Connect { node: NodeId, peer: NodeId },
    SubmitTx { node: NodeId, tx: Transaction },
    /// `node` mines one block on its current tip with its mempool contents.
    Mine { node: NodeId },
    Tick { node: NodeId },
    /// `node` broadcasts a discovery beacon to every other node.
    Beacon { node: NodeId },
}

impl Action {
    fn node(&self) -> &NodeId {
        match self {
            Action::Connect { node, .. }
            | Action::SubmitTx { node, .. }
            | Action::Mine { node }
            | Action::Tick { node }
            | Action::Beacon { node } => node,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheduled {
    pub at: u64,
    pub action: Action,
}

impl Scheduled {
    pub fn new(at: u64, action: Action) -> Self {
        Self { at, action }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub sent_at: u64,
    /// `None` when the message was dropped.
    pub delivered_at: Option<u64>,
    pub from: NodeId,
    pub to: NodeId,
    pub msg: PeerMessage,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub nodes: Vec<ProtocolNode>,
    pub trace: Vec<TraceEntry>,
    /// Hashes of every block mined during the run, in mining order.
    pub mined: Vec<Digest>,
    /// Blocks dropped from some node's chain by a reorg, counted per node.
    pub abandoned_blocks: usize,
    /// `false` if the event limit was hit with work still queued.
    pub quiescent: bool,
    pub end_time: u64,
}

impl SimOutcome {
    /// All nodes hold byte-identical chains.
    pub fn converged(&self) -> bool {
        let Some(first) = self.nodes.first() else {
            return true;
        };
        let reference: Vec<Vec<u8>> = first.chain.blocks().iter().map(Block::to_bytes).collect();
        self.nodes.iter().all(|n| {
            n.chain.blocks().len() == reference.len()
                && n.chain
                    .blocks()
                    .iter()
                    .zip(&reference)
                    .all(|(b, r)| b.to_bytes() == *r)
        })
    }

    pub fn node(&self, id: &NodeId) -> Option<&ProtocolNode> {
        self.nodes.iter().find(|n| n.id() == id)
    }

    /// Messages of the given wire type, e.g. `"TX_GOSSIP"`.
    pub fn count_sent(&self, type_name: &str) -> usize {
        self.trace
            .iter()
            .filter(|e| e.msg.body.type_name() == type_name)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("simulation needs at least one node")]
    NoNodes,
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("schedule references unknown node {0}")]
    UnknownNode(NodeId),
    #[error("drop probability {0} outside [0, 1]")]
    BadDropProbability(String),
    #[error("latency range {0}..={1} is empty")]
    BadLatency(u64, u64),
}

enum Event {
    Scripted(Action),
    Deliver { to: NodeId, msg: PeerMessage },
    Beacon { to: NodeId, beacon: Beacon },
}

struct Sim<'a> {
    nodes: Vec<ProtocolNode>,
    index: BTreeMap<NodeId, usize>,
    queue: BinaryHeap<Reverse<(u64, u64)>>,
    events: BTreeMap<u64, Event>,
    seq: u64,
    rng: ChaCha8Rng,
    model: &'a NetworkModel,
    trace: Vec<TraceEntry>,
    mined: Vec<Digest>,
    abandoned: usize,
}

impl Sim<'_> {
    fn push(&mut self, at: u64, event: Event) {
        self.queue.push(Reverse((at, self.seq)));
        self.events.insert(self.seq, event);
        self.seq += 1;
    }

    fn latency(&mut self) -> u64 {
        self.rng
            .gen_range(self.model.min_latency_ms..=self.model.max_latency_ms)
    }

    fn dropped(&mut self) -> bool {
        self.model.drop_probability > 0.0 && self.rng.gen_bool(self.model.drop_probability)
    }

    fn dispatch(&mut self, from: NodeId, reaction: Reaction, now: u64) {
        self.abandoned += reaction.abandoned.len();
        for out in reaction.outbound {
            let known = self.index.contains_key(&out.to);
            let delivered_at = if known && !self.dropped() {
                Some(now + self.latency())
            } else {
                None
            };
            self.trace.push(TraceEntry {
                sent_at: now,
                delivered_at,
                from: from.clone(),
                to: out.to.clone(),
                msg: out.msg.clone(),
            });
            if let Some(at) = delivered_at {
                self.push(at, Event::Deliver { to: out.to, msg: out.msg });
            }
        }
    }

    fn run_action(&mut self, action: Action, now: u64) {
        let id = action.node().clone();
        let i = self.index[&id];
        let reaction = match action {
            Action::Connect { peer, .. } => self.nodes[i].connect(peer, now),
            Action::SubmitTx { tx, .. } => self.nodes[i].submit_transaction(tx).unwrap_or_default(),
            Action::Mine { .. } => {
                let node = &mut self.nodes[i];
                let mut template = node.chain.block_template(id.as_str(), now);
                template.transactions.truncate(MAX_BLOCK_TRANSACTIONS);
                let found = mine(&template.header, 0, u64::MAX).expect("search space is the full u64 range");
                let block = template.with_nonce(found.nonce);
                self.mined.push(found.digest);
                node.announce_block(block)
                    .expect("a block mined on the local tip extends it")
            }
            Action::Tick { .. } => self.nodes[i].tick(now),
            Action::Beacon { .. } => {
                if let Some(beacon) = self.nodes[i].discovery_tick(now) {
                    let others: Vec<NodeId> =
                        self.index.keys().filter(|k| **k != id).cloned().collect();
                    for to in others {
                        if !self.dropped() {
                            let at = now + self.latency();
                            self.push(at, Event::Beacon { to, beacon: beacon.clone() });
                        }
                    }
                }
                Reaction::default()
            }
        };
        self.dispatch(id, reaction, now);
    }
}

/// Runs `schedule` over `nodes` until the event queue drains or
/// `DEFAULT_EVENT_LIMIT` events have been processed.
pub fn simulate(
    nodes: Vec<ProtocolNode>,
    schedule: Vec<Scheduled>,
    model: &NetworkModel,
    seed: u64,
) -> Result<SimOutcome, SimError> {
    simulate_with_limit(nodes, schedule, model, seed, DEFAULT_EVENT_LIMIT)
}

pub fn simulate_with_limit(
    nodes: Vec<ProtocolNode>,
    schedule: Vec<Scheduled>,
    model: &NetworkModel,
    seed: u64,
    event_limit: usize,
) -> Result<SimOutcome, SimError> {
    if nodes.is_empty() {
        return Err(SimError::NoNodes);
    }
    if !(0.0..=1.0).contains(&model.drop_probability) {
        return Err(SimError::BadDropProbability(model.drop_probability.to_string()));
    }
    if model.min_latency_ms > model.max_latency_ms {
        return Err(SimError::BadLatency(model.min_latency_ms, model.max_latency_ms));
    }
    let mut index = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if index.insert(n.id().clone(), i).is_some() {
            return Err(SimError::DuplicateNode(n.id().clone()));
        }
    }
    for s in &schedule {
        let id = s.action.node();
        if !index.contains_key(id) {
            return Err(SimError::UnknownNode(id.clone()));
        }
        if let Action::Connect { peer, .. } = &s.action {
            if !index.contains_key(peer) {
                return Err(SimError::UnknownNode(peer.clone()));
            }
        }
    }

    let mut sim = Sim {
        nodes,
        index,
        queue: BinaryHeap::new(),
        events: BTreeMap::new(),
        seq: 0,
        rng: ChaCha8Rng::seed_from_u64(seed),
        model,
        trace: Vec::new(),
        mined: Vec::new(),
        abandoned: 0,
    };
    for s in schedule {
        sim.push(s.at, Event::Scripted(s.action));
    }

    let mut processed = 0usize;
    let mut now = 0u64;
    while let Some(Reverse((at, seq))) = sim.queue.pop() {
        if processed >= event_limit {
            sim.queue.push(Reverse((at, seq)));
            break;
        }
        processed += 1;
        now = at;
        let event = sim.events.remove(&seq).expect("queued events are stored");
        match event {
            Event::Scripted(action) => sim.run_action(action, now),
            Event::Deliver { to, msg } => {
                let i = sim.index[&to];
                let reaction = sim.nodes[i].handle_message(msg, now);
                sim.dispatch(to, reaction, now);
            }
            Event::Beacon { to, beacon } => {
                let i = sim.index[&to];
                let reaction = sim.nodes[i].on_beacon(&beacon, now);
                sim.dispatch(to, reaction, now);
            }
        }
    }

    Ok(SimOutcome {
        quiescent: sim.queue.is_empty(),
        nodes: sim.nodes,
        trace: sim.trace,
        mined: sim.mined,
        abandoned_blocks: sim.abandoned,
        end_time: now,
    })
}
