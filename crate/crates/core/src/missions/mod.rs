//! Missions, levels and the achievement leaderboard.
//!
//! Progress is a pure fold: quiz answers and interaction events go in, a new
//! [`Progress`] comes out. Level-ups are announced on-chain as achievement
//! transactions, and the leaderboard is read back from the ledger.

mod achievements;
mod pack;
mod progress;

pub use achievements::{leaderboard, on_level_up, Achievement, LeaderboardEntry};
pub use pack::{
    default_pack, load_mission_pack, PackError, PackViolation, DEFAULT_PACK_JSON,
};
pub use progress::{answer_quiz, record_event, QuizOutcome};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionKind {
    Quiz,
    Action,
}

/// Interactions that can complete an action mission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionEvent {
    PostedMessage,
    ViewedTransaction,
    ViewedBlock,
    ViewedPeers,
    ManualNonceFound,
}

impl ActionEvent {
    pub const ALL: [ActionEvent; 5] = [
        ActionEvent::PostedMessage,
        ActionEvent::ViewedTransaction,
        ActionEvent::ViewedBlock,
        ActionEvent::ViewedPeers,
        ActionEvent::ManualNonceFound,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quiz {
    pub choices: Vec<String>,
    pub correct_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mission {
    pub id: String,
    pub level: u32,
    pub kind: MissionKind,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quiz: Option<Quiz>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_event: Option<ActionEvent>,
}

/// A validated mission pack. Build one with [`load_mission_pack`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissionPack {
    pub version: u32,
    pub title: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub missions: Vec<Mission>,
}

impl MissionPack {
    pub fn mission(&self, id: &str) -> Option<&Mission> {
        self.missions.iter().find(|m| m.id == id)
    }

    /// Highest level that has missions.
    pub fn max_level(&self) -> u32 {
        self.missions.iter().map(|m| m.level).max().unwrap_or(0)
    }

    pub fn missions_at(&self, level: u32) -> impl Iterator<Item = &Mission> {
        self.missions.iter().filter(move |m| m.level == level)
    }

    /// `1 +` the number of levels, counted from 1, whose missions are all in `completed`.
    pub fn level_for(&self, completed: &BTreeSet<String>) -> u32 {
        let mut level = 1;
        while level <= self.max_level() && self.missions_at(level).all(|m| completed.contains(&m.id)) {
            level += 1;
        }
        level
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub completed: BTreeSet<String>,
    pub attempts: BTreeMap<String, u32>,
    pub level: u32,
}

impl Default for Progress {
    fn default() -> Self {
        Self {
            completed: BTreeSet::new(),
            attempts: BTreeMap::new(),
            level: 1,
        }
    }
}

impl Progress {
    pub fn is_completed(&self, mission_id: &str) -> bool {
        self.completed.contains(mission_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MissionError {
    #[error("unknown mission {0:?}")]
    UnknownMission(String),
    #[error("mission {0:?} is not a quiz")]
    NotAQuiz(String),
    #[error("mission {id:?} unlocks at level {required}, current level is {current}")]
    Locked { id: String, required: u32, current: u32 },
    #[error("answer {answer} out of range for {choices} choices")]
    ChoiceOutOfRange { answer: usize, choices: usize },
}
