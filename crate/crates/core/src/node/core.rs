use std::collections::{BTreeMap, HashMap, HashSet};

use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::api::{
    required_level, ActionBody, ApiError, ErrorCode, Event, JoinBody, MissionView, MissionsBody,
    NonceBody, QuizBody, Request, RequestFrame, ResponseBody, ServerFrame, TemplateSummary,
};
use crate::chat::{
    chain_summary, get_block, get_transaction, message_feed, peer_table, view_message, ChatError,
    ClassroomKey, MessageStatus, SessionId,
};
use crate::ledger::{try_nonce, Block, ChainState, Digest, Transaction, TxKind};
use crate::missions::{
    answer_quiz, leaderboard, on_level_up, record_event, ActionEvent, LeaderboardEntry,
    MissionError, MissionPack,
};
use crate::p2p::{Beacon, NodeId, Outbound, PeerMessage, ProtocolNode, Reaction};

/// Difficulty of the hand-mining exercise, independent of the chain's.
pub const MANUAL_DIFFICULTY: u32 = 8;

/// Identifies one client WebSocket connection.
pub type ConnId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Conn(ConnId),
    All,
}

/// Frames for clients and messages for peers produced by one step.
#[derive(Debug, Default)]
pub struct Output {
    pub frames: Vec<(Target, ServerFrame)>,
    pub peers: Vec<Outbound>,
}

impl Output {
    fn broadcast(&mut self, event: Event) {
        self.frames.push((Target::All, ServerFrame::event(&event)));
    }

    fn send(&mut self, conn: ConnId, event: Event) {
        self.frames.push((Target::Conn(conn), ServerFrame::event(&event)));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeStatus {
    pub node_id: NodeId,
    pub classroom: String,
    pub tip_index: u64,
    pub tip_hash: Digest,
    pub peers: usize,
    pub sessions: usize,
    pub mempool: usize,
    pub difficulty: u32,
}

/// All mutable node state. The server owns exactly one and feeds it every
/// event in sequence.
pub struct NodeCore {
    proto: ProtocolNode,
    sessions: crate::chat::SessionTable,
    owners: BTreeMap<SessionId, ConnId>,
    jobs: HashMap<SessionId, Block>,
    pack: MissionPack,
    key: ClassroomKey,
    rng: ChaCha20Rng,
    miner_nick: String,
    announced_blocks: Vec<Digest>,
    announced_msgs: HashSet<Digest>,
    board: Vec<LeaderboardEntry>,
}

impl NodeCore {
    pub fn new(id: NodeId, chain: ChainState, pack: MissionPack, key: ClassroomKey, rng: ChaCha20Rng) -> Self {
        let announced_blocks = chain.blocks().iter().map(Block::hash).collect();
        let board = leaderboard(&chain);
        let miner_nick = format!("node {id}");
        Self {
            proto: ProtocolNode::new(id, chain),
            sessions: Default::default(),
            owners: BTreeMap::new(),
            jobs: HashMap::new(),
            pack,
            key,
            rng,
            miner_nick,
            announced_blocks,
            announced_msgs: HashSet::new(),
            board,
        }
    }

    pub fn chain(&self) -> &ChainState {
        &self.proto.chain
    }

    pub fn protocol(&self) -> &ProtocolNode {
        &self.proto
    }

    pub fn id(&self) -> &NodeId {
        self.proto.id()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    pub fn status(&self) -> NodeStatus {
        let chain = &self.proto.chain;
        NodeStatus {
            node_id: self.id().clone(),
            classroom: self.proto.peers.classroom_name.clone(),
            tip_index: chain.tip_index(),
            tip_hash: chain.tip_hash(),
            peers: self.proto.peers.peers.len(),
            sessions: self.sessions.len(),
            mempool: chain.mempool_len(),
            difficulty: chain.difficulty(),
        }
    }

    pub fn connect(&mut self, addr: NodeId, now: u64) -> Output {
        let reaction = self.proto.connect(addr, now);
        self.absorb(reaction)
    }

    pub fn peer_message(&mut self, msg: PeerMessage, now: u64) -> Output {
        let reaction = self.proto.handle_message(msg, now);
        self.absorb(reaction)
    }

    pub fn peer_malformed(&mut self, from: &NodeId) -> Output {
        let reaction = self.proto.handle_malformed(from);
        self.absorb(reaction)
    }

    pub fn beacon(&mut self, beacon: &Beacon, now: u64) -> Output {
        let reaction = self.proto.on_beacon(beacon, now);
        self.absorb(reaction)
    }

    pub fn tick(&mut self, now: u64) -> Output {
        let reaction = self.proto.tick(now);
        self.absorb(reaction)
    }

    pub fn discovery_tick(&mut self, now: u64) -> Option<Beacon> {
        self.proto.discovery_tick(now)
    }

    /// A block template over the mempool, or `None` if there is nothing to mine.
    pub fn mining_template(&self, now: u64) -> Option<Block> {
        let chain = &self.proto.chain;
        if chain.mempool_len() == 0 {
            return None;
        }
        Some(chain.block_template(&self.miner_nick, now.max(chain.tip().header.timestamp)))
    }

    /// Appends a block found by the miner. Stale blocks are dropped.
    pub fn mined(&mut self, block: Block) -> Output {
        if block.header.prev_hash != self.proto.chain.tip_hash() {
            return Output::default();
        }
        match self.proto.announce_block(block) {
            Ok(reaction) => self.absorb(reaction),
            Err(_) => Output::default(),
        }
    }

    pub fn client_closed(&mut self, conn: ConnId) {
        let owned: Vec<SessionId> = self
            .owners
            .iter()
            .filter(|(_, c)| **c == conn)
            .map(|(s, _)| s.clone())
            .collect();
        for sid in owned {
            self.owners.remove(&sid);
            self.jobs.remove(&sid);
            self.sessions.remove(&sid);
        }
    }

    /// Handles one text frame from `conn`. The response comes first in the
    /// output, followed by any events it caused.
    pub fn client_text(&mut self, conn: ConnId, text: &str, now: u64) -> Output {
        let frame: RequestFrame = match serde_json::from_str(text) {
            Ok(f) => f,
            Err(e) => {
                let err = ApiError::new(ErrorCode::MalformedRequest, e.to_string());
                return Output {
                    frames: vec![(Target::Conn(conn), ServerFrame::error(None, &err))],
                    peers: Vec::new(),
                };
            }
        };
        self.client_frame(conn, frame, now)
    }

    pub fn client_frame(&mut self, conn: ConnId, frame: RequestFrame, now: u64) -> Output {
        let mut out = Output::default();
        let reply = match Request::parse(&frame) {
            Ok(req) => {
                let kind = req.type_name();
                self.dispatch(conn, req, now, &mut out)
                    .map(|body| ServerFrame::response(frame.req_id.clone(), kind, body))
            }
            Err(e) => Err(e),
        };
        let reply = reply.unwrap_or_else(|e| ServerFrame::error(frame.req_id, &e));
        out.frames.insert(0, (Target::Conn(conn), reply));
        out
    }

    fn dispatch(&mut self, conn: ConnId, req: Request, now: u64, out: &mut Output) -> Result<ResponseBody, ApiError> {
        let sid = match req.token() {
            None => None,
            Some(token) => {
                let sid = SessionId(token.to_owned());
                let session = self
                    .sessions
                    .get(&sid)
                    .ok_or_else(|| ApiError::new(ErrorCode::InvalidToken, "unknown or expired session"))?;
                let needed = required_level(req.type_name());
                if session.level() < needed {
                    return Err(ApiError::locked(needed));
                }
                self.owners.insert(sid.clone(), conn);
                Some(sid)
            }
        };
        let sid = || sid.clone().expect("token checked above");

        match req {
            Request::Join { nickname } => {
                let session = self
                    .sessions
                    .join(&nickname, &self.proto.chain, &mut self.rng)
                    .map_err(|e| ApiError::new(ErrorCode::Rejected, e.to_string()))?;
                let (id, nickname, level) = (session.id.clone(), session.nickname.clone(), session.level());
                self.owners.insert(id.clone(), conn);
                Ok(ResponseBody::Join(JoinBody {
                    token: id.0.clone(),
                    nickname,
                    level,
                    missions: self.missions_view(&id),
                }))
            }
            Request::Post { text, .. } => {
                let sid = sid();
                let session = self.sessions.get_mut(&sid).expect("session exists");
                let tx = session
                    .post_message(&text, &self.key, now, &mut self.rng)
                    .map_err(chat_error)?;
                let view = view_message(&tx, MessageStatus::Pending, &self.key).expect("own message verifies");
                self.submit(tx, out)?;
                self.progress_event(&sid, ActionEvent::PostedMessage, now, out);
                Ok(ResponseBody::Message { message: view })
            }
            Request::QuizAnswer {
                mission_id,
                answer_index,
                ..
            } => {
                let sid = sid();
                let session = self.sessions.get(&sid).expect("session exists");
                let (next, outcome) =
                    answer_quiz(&self.pack, &session.progress, &mission_id, answer_index).map_err(mission_error)?;
                let newly = self.apply_progress(&sid, next, now, out);
                Ok(ResponseBody::Quiz(QuizBody {
                    outcome,
                    level: self.level_of(&sid),
                    newly_completed: newly,
                }))
            }
            Request::ActionEvent { event, .. } => {
                if matches!(event, ActionEvent::PostedMessage | ActionEvent::ManualNonceFound) {
                    return Err(ApiError::new(
                        ErrorCode::Rejected,
                        "this event is recorded by the node itself",
                    ));
                }
                let sid = sid();
                let newly = self.progress_event(&sid, event, now, out);
                Ok(ResponseBody::Action(ActionBody {
                    level: self.level_of(&sid),
                    newly_completed: newly,
                }))
            }
            Request::TryNonce { nonce, .. } => {
                let sid = sid();
                let tip = self.proto.chain.tip_hash();
                let stale = self.jobs.get(&sid).map_or(true, |job| job.header.prev_hash != tip);
                if stale {
                    let nick = self.sessions.get(&sid).expect("session exists").nickname.clone();
                    let mut job = self.proto.chain.block_template(&nick, now);
                    job.header.difficulty = MANUAL_DIFFICULTY;
                    self.jobs.insert(sid.clone(), job);
                }
                let header = self.jobs[&sid].header.clone();
                let probe = try_nonce(&header, nonce);
                if probe.meets {
                    self.jobs.remove(&sid);
                    self.progress_event(&sid, ActionEvent::ManualNonceFound, now, out);
                }
                Ok(ResponseBody::Nonce(NonceBody {
                    nonce,
                    digest: probe.digest,
                    meets: probe.meets,
                    leading_zero_bits: probe.digest.leading_zero_bits(),
                    template: TemplateSummary {
                        index: header.index,
                        prev_hash: header.prev_hash,
                        tx_root: header.tx_root,
                        timestamp: header.timestamp,
                        difficulty: header.difficulty,
                        miner_nick: header.miner_nick,
                    },
                }))
            }
            Request::GetFeed { .. } => Ok(ResponseBody::Feed {
                messages: message_feed(&self.proto.chain, &self.key),
            }),
            Request::GetMissions { .. } => Ok(ResponseBody::Missions(self.missions_view(&sid()))),
            Request::GetLeaderboard { .. } => Ok(ResponseBody::Leaderboard {
                entries: self.board.clone(),
            }),
            Request::GetBlock { index, .. } => {
                let view = get_block(&self.proto.chain, index).map_err(chat_error)?;
                self.progress_event(&sid(), ActionEvent::ViewedBlock, now, out);
                Ok(ResponseBody::Block(view))
            }
            Request::GetTx { tx_id, .. } => {
                let view = get_transaction(&self.proto.chain, &tx_id, &self.key).map_err(chat_error)?;
                self.progress_event(&sid(), ActionEvent::ViewedTransaction, now, out);
                Ok(ResponseBody::Tx(view))
            }
            Request::GetChainSummary { .. } => {
                let blocks = chain_summary(&self.proto.chain);
                self.progress_event(&sid(), ActionEvent::ViewedBlock, now, out);
                Ok(ResponseBody::ChainSummary { blocks })
            }
            Request::GetPeers { .. } => {
                let peers = peer_table(&self.proto.peers);
                self.progress_event(&sid(), ActionEvent::ViewedPeers, now, out);
                Ok(ResponseBody::Peers { peers })
            }
        }
    }

    fn level_of(&self, sid: &SessionId) -> u32 {
        self.sessions.get(sid).map_or(1, |s| s.level())
    }

    fn missions_view(&self, sid: &SessionId) -> MissionsBody {
        let progress = &self.sessions.get(sid).expect("session exists").progress;
        let missions = self
            .pack
            .missions
            .iter()
            .filter(|m| m.level <= progress.level)
            .map(|m| MissionView {
                id: m.id.clone(),
                level: m.level,
                kind: m.kind,
                prompt: m.prompt.clone(),
                choices: m.quiz.as_ref().map(|q| q.choices.clone()),
                action_event: m.action_event,
                completed: progress.is_completed(&m.id),
                attempts: progress.attempts.get(&m.id).copied().unwrap_or(0),
            })
            .collect();
        MissionsBody {
            level: progress.level,
            max_level: self.pack.max_level(),
            missions,
        }
    }

    fn progress_event(&mut self, sid: &SessionId, event: ActionEvent, now: u64, out: &mut Output) -> Vec<String> {
        let Some(session) = self.sessions.get(sid) else {
            return Vec::new();
        };
        let (next, _) = record_event(&self.pack, &session.progress, event);
        self.apply_progress(sid, next, now, out)
    }

    /// Stores `next`, notifies the owner and announces any level-up on chain.
    fn apply_progress(
        &mut self,
        sid: &SessionId,
        next: crate::missions::Progress,
        now: u64,
        out: &mut Output,
    ) -> Vec<String> {
        let conn = self.owners.get(sid).copied();
        let session = self.sessions.get_mut(sid).expect("session exists");
        let newly: Vec<String> = next.completed.difference(&session.progress.completed).cloned().collect();
        let old_level = session.progress.level;
        session.progress = next;
        let new_level = session.progress.level;
        let achievement = if new_level > old_level {
            on_level_up(&session.key, &session.nickname, new_level, now).ok()
        } else {
            None
        };
        if let Some(conn) = conn {
            for id in &newly {
                out.send(conn, Event::MissionCompleted { mission_id: id.clone() });
            }
            if new_level > old_level {
                out.send(conn, Event::LevelUp { level: new_level });
            }
        }
        if let Some(tx) = achievement {
            let _ = self.submit(tx, out);
        }
        newly
    }

    fn submit(&mut self, tx: Transaction, out: &mut Output) -> Result<(), ApiError> {
        let reaction = self
            .proto
            .submit_transaction(tx)
            .map_err(|e| ApiError::new(ErrorCode::Rejected, e.to_string()))?;
        let more = self.absorb(reaction);
        out.frames.extend(more.frames);
        out.peers.extend(more.peers);
        Ok(())
    }

    /// Turns a protocol reaction into peer traffic and client events.
    fn absorb(&mut self, reaction: Reaction) -> Output {
        let mut out = Output {
            frames: Vec::new(),
            peers: reaction.outbound,
        };
        for tx in &reaction.new_transactions {
            if tx.kind == TxKind::Chat && self.announced_msgs.insert(tx.id) {
                if let Some(view) = view_message(tx, MessageStatus::Pending, &self.key) {
                    out.broadcast(Event::NewMessage(view));
                }
            }
        }
        if reaction.chain_changed {
            self.announce_chain(&mut out);
        }
        if reaction.peers_changed {
            out.broadcast(Event::PeersChanged {
                peer_count: self.proto.peers.peers.len(),
            });
        }
        let board = leaderboard(&self.proto.chain);
        if board != self.board {
            self.board = board;
            out.broadcast(Event::LeaderboardChanged {
                entries: self.board.clone(),
            });
        }
        out
    }

    fn announce_chain(&mut self, out: &mut Output) {
        let blocks = self.proto.chain.blocks();
        let common = self
            .announced_blocks
            .iter()
            .zip(blocks)
            .take_while(|(h, b)| **h == b.hash())
            .count();
        for block in &blocks[common..] {
            let index = block.header.index;
            for tx in &block.transactions {
                if tx.kind == TxKind::Chat && self.announced_msgs.insert(tx.id) {
                    let status = MessageStatus::Confirmed { block_index: index };
                    if let Some(view) = view_message(tx, status, &self.key) {
                        out.broadcast(Event::NewMessage(view));
                    }
                }
            }
            out.broadcast(Event::BlockMined {
                index,
                hash: block.hash(),
                miner_nick: block.header.miner_nick.clone(),
                transactions: block.transactions.iter().map(|t| t.id).collect(),
            });
        }
        self.announced_blocks = blocks.iter().map(Block::hash).collect();
    }
}

fn chat_error(e: ChatError) -> ApiError {
    match e {
        ChatError::RateLimited { retry_after_ms } => ApiError {
            retry_after_ms: Some(retry_after_ms),
            ..ApiError::new(ErrorCode::RateLimited, e.to_string())
        },
        ChatError::BlockNotFound(_) | ChatError::TxNotFound(_) => ApiError::new(ErrorCode::NotFound, e.to_string()),
        other => ApiError::new(ErrorCode::Rejected, other.to_string()),
    }
}

fn mission_error(e: MissionError) -> ApiError {
    match e {
        MissionError::Locked { required, .. } => ApiError::locked(required),
        MissionError::UnknownMission(_) => ApiError::new(ErrorCode::NotFound, e.to_string()),
        other => ApiError::new(ErrorCode::Rejected, other.to_string()),
    }
}
