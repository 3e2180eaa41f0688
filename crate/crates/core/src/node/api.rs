//! JSON frames spoken over the client WebSocket.
//!
//! Client to node: `{"req_id": any?, "type": "<request>", "body": {...}}`.
//! Node to client: the same envelope. A response echoes `req_id` and the
//! request type, a failure has type `"error"`, and pushed events carry no
//! `req_id`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::chat::{BlockView, ChainSummaryRow, ChatMessageView, PeerRow, TxView};
use crate::ledger::Digest;
use crate::missions::{ActionEvent, LeaderboardEntry, MissionKind, QuizOutcome};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RequestFrame {
    #[serde(default)]
    pub req_id: Option<Value>,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub body: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServerFrame {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub req_id: Option<Value>,
    #[serde(rename = "type")]
    pub kind: String,
    pub body: Value,
}

impl ServerFrame {
    pub fn response(req_id: Option<Value>, kind: &str, body: impl Serialize) -> Self {
        Self {
            req_id,
            kind: kind.to_owned(),
            body: serde_json::to_value(body).expect("response bodies serialize"),
        }
    }

    pub fn error(req_id: Option<Value>, err: &ApiError) -> Self {
        Self {
            req_id,
            kind: "error".into(),
            body: serde_json::to_value(err).expect("errors serialize"),
        }
    }

    pub fn event(event: &Event) -> Self {
        let value = serde_json::to_value(event).expect("events serialize");
        let Value::Object(mut map) = value else {
            unreachable!("events are tagged objects")
        };
        let kind = match map.remove("type") {
            Some(Value::String(s)) => s,
            _ => unreachable!("events carry a type tag"),
        };
        Self {
            req_id: None,
            kind,
            body: map.remove("body").unwrap_or(Value::Null),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }

    pub fn is_error(&self) -> bool {
        self.kind == "error"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    MalformedRequest,
    UnknownRequest,
    InvalidToken,
    Locked,
    NotFound,
    RateLimited,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_level: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retry_after_ms: Option<u64>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            required_level: None,
            retry_after_ms: None,
        }
    }

    pub fn locked(required: u32) -> Self {
        Self {
            required_level: Some(required),
            ..Self::new(ErrorCode::Locked, format!("reach level {required} to unlock"))
        }
    }
}

/// A parsed request. Every variant but `Join` carries the session token.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum Request {
    Join { nickname: String },
    Post { token: String, text: String },
    QuizAnswer { token: String, mission_id: String, answer_index: usize },
    ActionEvent { token: String, event: ActionEvent },
    TryNonce { token: String, nonce: u64 },
    GetFeed { token: String },
    GetMissions { token: String },
    GetLeaderboard { token: String },
    GetBlock { token: String, index: u64 },
    GetTx { token: String, tx_id: Digest },
    GetChainSummary { token: String },
    GetPeers { token: String },
}

pub const REQUEST_TYPES: [&str; 12] = [
    "join",
    "post",
    "quiz_answer",
    "action_event",
    "try_nonce",
    "get_feed",
    "get_missions",
    "get_leaderboard",
    "get_block",
    "get_tx",
    "get_chain_summary",
    "get_peers",
];

/// Level needed to issue each request type.
pub fn required_level(kind: &str) -> u32 {
    match kind {
        "get_block" | "get_tx" | "get_chain_summary" | "get_peers" => 2,
        _ => 1,
    }
}

impl Request {
    pub fn parse(frame: &RequestFrame) -> Result<Request, ApiError> {
        if !REQUEST_TYPES.contains(&frame.kind.as_str()) {
            return Err(ApiError::new(
                ErrorCode::UnknownRequest,
                format!("unknown request type {:?}", frame.kind),
            ));
        }
        let tagged = serde_json::json!({ "type": frame.kind, "body": frame.body });
        serde_json::from_value(tagged).map_err(|e| ApiError::new(ErrorCode::MalformedRequest, e.to_string()))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Request::Join { .. } => "join",
            Request::Post { .. } => "post",
            Request::QuizAnswer { .. } => "quiz_answer",
            Request::ActionEvent { .. } => "action_event",
            Request::TryNonce { .. } => "try_nonce",
            Request::GetFeed { .. } => "get_feed",
            Request::GetMissions { .. } => "get_missions",
            Request::GetLeaderboard { .. } => "get_leaderboard",
            Request::GetBlock { .. } => "get_block",
            Request::GetTx { .. } => "get_tx",
            Request::GetChainSummary { .. } => "get_chain_summary",
            Request::GetPeers { .. } => "get_peers",
        }
    }

    pub fn token(&self) -> Option<&str> {
        match self {
            Request::Join { .. } => None,
            Request::Post { token, .. }
            | Request::QuizAnswer { token, .. }
            | Request::ActionEvent { token, .. }
            | Request::TryNonce { token, .. }
            | Request::GetFeed { token }
            | Request::GetMissions { token }
            | Request::GetLeaderboard { token }
            | Request::GetBlock { token, .. }
            | Request::GetTx { token, .. }
            | Request::GetChainSummary { token }
            | Request::GetPeers { token } => Some(token),
        }
    }
}

/// A mission as a client sees it: no answer key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissionView {
    pub id: String,
    pub level: u32,
    pub kind: MissionKind,
    pub prompt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_event: Option<ActionEvent>,
    pub completed: bool,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissionsBody {
    pub level: u32,
    pub max_level: u32,
    pub missions: Vec<MissionView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JoinBody {
    pub token: String,
    pub nickname: String,
    pub level: u32,
    pub missions: MissionsBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuizBody {
    pub outcome: QuizOutcome,
    pub level: u32,
    pub newly_completed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActionBody {
    pub level: u32,
    pub newly_completed: Vec<String>,
}

/// Header fields of the block being mined by hand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateSummary {
    pub index: u64,
    pub prev_hash: Digest,
    pub tx_root: Digest,
    pub timestamp: u64,
    pub difficulty: u32,
    pub miner_nick: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonceBody {
    pub nonce: u64,
    pub digest: Digest,
    pub meets: bool,
    pub leading_zero_bits: u32,
    pub template: TemplateSummary,
}

/// Pushed to clients without a request.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum Event {
    NewMessage(ChatMessageView),
    BlockMined {
        index: u64,
        hash: Digest,
        miner_nick: String,
        transactions: Vec<Digest>,
    },
    MissionCompleted {
        mission_id: String,
    },
    LevelUp {
        level: u32,
    },
    LeaderboardChanged {
        entries: Vec<LeaderboardEntry>,
    },
    PeersChanged {
        peer_count: usize,
    },
}

/// Response payloads that need a named wrapper.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ResponseBody {
    Join(JoinBody),
    Message { message: ChatMessageView },
    Quiz(QuizBody),
    Action(ActionBody),
    Nonce(NonceBody),
    Feed { messages: Vec<ChatMessageView> },
    Missions(MissionsBody),
    Leaderboard { entries: Vec<LeaderboardEntry> },
    Block(BlockView),
    Tx(TxView),
    ChainSummary { blocks: Vec<ChainSummaryRow> },
    Peers { peers: Vec<PeerRow> },
}
