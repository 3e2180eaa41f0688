//! Random answer/event sequences and the progression contract they must keep.

use chunkchain::missions::{answer_quiz, record_event, ActionEvent, MissionError, MissionKind, MissionPack, Progress};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub enum Step {
    Answer(usize, usize),
    Event(usize),
}

pub fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        (0usize..8, 0usize..4).prop_map(|(m, a)| Step::Answer(m, a)),
        (0usize..5).prop_map(Step::Event),
    ]
}

pub fn apply(pack: &MissionPack, p: &Progress, s: &Step) -> Progress {
    match *s {
        Step::Answer(m, a) => {
            let id = &pack.missions[m].id;
            match answer_quiz(pack, p, id, a) {
                Ok((next, _)) => next,
                Err(_) => p.clone(),
            }
        }
        Step::Event(e) => record_event(pack, p, ActionEvent::ALL[e]).0,
    }
}

/// Replays `steps` from a fresh progress. Fails on a level drop, a lost
/// completion, a completed locked quiz, or a level-2 promotion that does
/// not coincide with finishing every level-1 mission.
pub fn check_contract(pack: &MissionPack, steps: &[Step]) -> Result<(), String> {
    let mut p = Progress::default();
    for (i, s) in steps.iter().enumerate() {
        let before = p.clone();
        if let Step::Answer(m, a) = *s {
            let mission = &pack.missions[m];
            if mission.kind == MissionKind::Quiz
                && mission.level > before.level
                && !matches!(answer_quiz(pack, &before, &mission.id, a), Err(MissionError::Locked { .. }))
            {
                return Err(format!("step {i}: locked quiz {} was answerable", mission.id));
            }
        }
        p = apply(pack, &p, s);
        if p.level < before.level {
            return Err(format!("step {i}: level fell from {} to {}", before.level, p.level));
        }
        if !p.completed.is_superset(&before.completed) {
            return Err(format!("step {i}: a completion was lost"));
        }
        for id in &p.completed {
            let m = pack.mission(id).unwrap();
            if m.level > before.level && !before.completed.contains(id) {
                return Err(format!("step {i}: level-{} mission {id} completed at level {}", m.level, before.level));
            }
        }
        let all_l1 = pack.missions_at(1).all(|m| p.completed.contains(&m.id));
        if all_l1 != (p.level >= 2) {
            return Err(format!("step {i}: level {} with level-1 set complete = {all_l1}", p.level));
        }
    }
    Ok(())
}
