use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use super::{Mission, MissionKind, MissionPack};

/// The bundled pack: four level-1 quizzes, one per learning objective, and
/// four level-2 interaction missions.
pub const DEFAULT_PACK_JSON: &str = include_str!("../../packs/default.json");

const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackViolation {
    /// 1-based line in the source document, when known.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for PackViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("mission pack has {} violation(s)", .0.len())]
pub struct PackError(pub Vec<PackViolation>);

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PackDocument {
    version: u32,
    title: String,
    #[serde(default)]
    description: Option<String>,
    missions: Vec<Mission>,
}

pub fn default_pack() -> MissionPack {
    load_mission_pack(DEFAULT_PACK_JSON).expect("bundled pack is valid")
}

/// Parses and validates a pack document, collecting every violation.
pub fn load_mission_pack(document: &str) -> Result<MissionPack, PackError> {
    let doc: PackDocument = serde_json::from_str(document).map_err(|e| {
        PackError(vec![PackViolation {
            line: Some(e.line()).filter(|&l| l > 0),
            message: e.to_string(),
        }])
    })?;
    let lines = mission_lines(document);
    let at = |i: usize| lines.get(i).copied();
    let mut violations = Vec::new();
    let mut push = |line: Option<usize>, message: String| violations.push(PackViolation { line, message });

    if doc.version != SUPPORTED_VERSION {
        push(None, format!("unsupported version {} (expected {SUPPORTED_VERSION})", doc.version));
    }
    if doc.missions.is_empty() {
        push(None, "pack has no missions".into());
    }
    let mut seen = HashSet::new();
    for (i, m) in doc.missions.iter().enumerate() {
        let line = at(i);
        if m.id.trim().is_empty() {
            push(line, format!("mission #{} has an empty id", i + 1));
        } else if !seen.insert(m.id.as_str()) {
            push(line, format!("duplicate mission id {:?}", m.id));
        }
        if m.level == 0 {
            push(line, format!("mission {:?}: level must be >= 1", m.id));
        }
        if m.prompt.trim().is_empty() {
            push(line, format!("mission {:?}: empty prompt", m.id));
        }
        match m.kind {
            MissionKind::Quiz => {
                if m.action_event.is_some() {
                    push(line, format!("quiz mission {:?} must not set action_event", m.id));
                }
                match &m.quiz {
                    None => push(line, format!("quiz mission {:?} is missing quiz", m.id)),
                    Some(q) => {
                        if !(2..=6).contains(&q.choices.len()) {
                            push(line, format!("mission {:?}: quiz needs 2-6 choices, has {}", m.id, q.choices.len()));
                        }
                        if q.correct_index >= q.choices.len() {
                            push(line, format!("mission {:?}: correct_index {} out of range", m.id, q.correct_index));
                        }
                    }
                }
            }
            MissionKind::Action => {
                if m.quiz.is_some() {
                    push(line, format!("action mission {:?} must not set quiz", m.id));
                }
                if m.action_event.is_none() {
                    push(line, format!("action mission {:?} is missing action_event", m.id));
                }
            }
        }
    }
    let levels: BTreeSet<u32> = doc.missions.iter().map(|m| m.level).filter(|&l| l > 0).collect();
    if let Some(&max) = levels.iter().next_back() {
        if levels.len() != max as usize {
            let listed: Vec<String> = levels.iter().map(u32::to_string).collect();
            push(
                None,
                format!("levels must be contiguous from 1, found {{{}}}", listed.join(",")),
            );
        }
    }

    if violations.is_empty() {
        Ok(MissionPack {
            version: doc.version,
            title: doc.title,
            description: doc.description,
            missions: doc.missions,
        })
    } else {
        Err(PackError(violations))
    }
}

/// Line numbers of successive `"id":` keys, which in a pack document
/// belong to the missions in order.
fn mission_lines(document: &str) -> Vec<usize> {
    let mut out = Vec::new();
    for (n, line) in document.lines().enumerate() {
        let mut rest = line;
        while let Some(pos) = rest.find("\"id\"") {
            rest = &rest[pos + 4..];
            if rest.trim_start().starts_with(':') {
                out.push(n + 1);
            }
        }
    }
    out
}
