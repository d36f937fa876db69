use serde::{Deserialize, Serialize};

use super::game::Game;
use crate::belief::Belief;
use crate::error::{Error, Result};

/// A student action. `Pick` indexes the student's own presentation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Pick(usize),
    Wait,
}

/// Running state of one episode.
#[derive(Clone, Debug)]
pub struct EpisodeState {
    /// Number of completed rounds.
    pub round: usize,
    pub messages: Vec<usize>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub student_belief: Belief,
    pub teacher_estimate: Belief,
    pub terminal: bool,
    pub gain: f64,
    /// Canonical candidate chosen by the final action, if any.
    pub chosen: Option<usize>,
}

impl EpisodeState {
    pub fn new(game: &Game) -> Self {
        let k = game.num_candidates();
        EpisodeState {
            round: 0,
            messages: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            student_belief: Belief::uniform(k),
            teacher_estimate: Belief::uniform(k),
            terminal: false,
            gain: 0.0,
            chosen: None,
        }
    }

    /// Applies one round: reward is `-c_m`, plus one if the pick is the target.
    pub fn step(&mut self, game: &Game, message: usize, action: Action) -> Result<f64> {
        if self.terminal {
            return Err(Error::Protocol("step on a terminal episode".into()));
        }
        if message >= game.vocab() {
            return Err(Error::Protocol(format!("message {message} outside message space")));
        }
        let mut reward = -game.message_cost;
        match action {
            Action::Pick(j) => {
                let canonical = *game
                    .student_perm
                    .get(j)
                    .ok_or_else(|| Error::Protocol(format!("action {j} outside candidate range")))?;
                if canonical == game.target {
                    reward += 1.0;
                }
                self.chosen = Some(canonical);
            }
            Action::Wait => {}
        }
        self.round += 1;
        self.messages.push(message);
        self.actions.push(action);
        self.rewards.push(reward);
        self.gain += reward;
        self.terminal = action != Action::Wait || self.round >= game.max_rounds;
        Ok(reward)
    }

    pub fn correct(&self, game: &Game) -> bool {
        self.chosen == Some(game.target)
    }
}

/// Total gain of a finished episode.
pub fn total_gain(state: &EpisodeState) -> Result<f64> {
    if !state.terminal {
        return Err(Error::Protocol("total gain of an unfinished episode".into()));
    }
    Ok(state.rewards.iter().sum())
}
