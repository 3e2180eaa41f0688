use serde::Serialize;

use super::{ActionEvent, MissionError, MissionKind, MissionPack, Progress};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuizOutcome {
    Correct,
    Incorrect,
    AlreadyDone,
}

pub fn answer_quiz(
    pack: &MissionPack,
    progress: &Progress,
    mission_id: &str,
    answer_index: usize,
) -> Result<(Progress, QuizOutcome), MissionError> {
    let mission = pack
        .mission(mission_id)
        .ok_or_else(|| MissionError::UnknownMission(mission_id.to_owned()))?;
    let quiz = match (&mission.kind, &mission.quiz) {
        (MissionKind::Quiz, Some(quiz)) => quiz,
        _ => return Err(MissionError::NotAQuiz(mission_id.to_owned())),
    };
    if mission.level > progress.level {
        return Err(MissionError::Locked {
            id: mission_id.to_owned(),
            required: mission.level,
            current: progress.level,
        });
    }
    if progress.is_completed(mission_id) {
        return Ok((progress.clone(), QuizOutcome::AlreadyDone));
    }
    if answer_index >= quiz.choices.len() {
        return Err(MissionError::ChoiceOutOfRange {
            answer: answer_index,
            choices: quiz.choices.len(),
        });
    }
    let mut next = progress.clone();
    *next.attempts.entry(mission_id.to_owned()).or_insert(0) += 1;
    if answer_index != quiz.correct_index {
        return Ok((next, QuizOutcome::Incorrect));
    }
    next.completed.insert(mission_id.to_owned());
    next.level = next.level.max(pack.level_for(&next.completed));
    Ok((next, QuizOutcome::Correct))
}

/// Completes every open action mission at or below the current level that
/// waits for `event`. Events for locked levels are dropped.
pub fn record_event(
    pack: &MissionPack,
    progress: &Progress,
    event: ActionEvent,
) -> (Progress, Vec<String>) {
    let mut next = progress.clone();
    let newly: Vec<String> = pack
        .missions
        .iter()
        .filter(|m| {
            m.kind == MissionKind::Action
                && m.action_event == Some(event)
                && m.level <= progress.level
                && !progress.is_completed(&m.id)
        })
        .map(|m| m.id.clone())
        .collect();
    for id in &newly {
        *next.attempts.entry(id.clone()).or_insert(0) += 1;
        next.completed.insert(id.clone());
    }
    next.level = next.level.max(pack.level_for(&next.completed));
    (next, newly)
}
