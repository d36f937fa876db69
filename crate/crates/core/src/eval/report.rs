use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::rtd::{game_levels, Level};
use crate::trainer::{run_episode, Mode, StudentPolicy, TeacherPolicy};

/// Level strata reported separately: 0, 1, 2 or more, and unreachable.
pub const LEVEL_BUCKETS: [&str; 4] = ["0", "1", "2", "inf"];

pub fn level_bucket(level: Level) -> usize {
    match level {
        Level::Finite(k) => k.min(2),
        Level::Unreachable => 3,
    }
}

/// Independent random stream for game `index` of an evaluation seeded with `seed`.
pub fn game_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GameResult {
    pub index: usize,
    pub target_level: Level,
    /// Mean cosine similarity between the target and each distractor.
    pub difficulty: f64,
    pub first_message: usize,
    /// Whether the first message names an attribute of the target.
    pub valid: bool,
    pub correct: bool,
    pub gain: f64,
}

#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq)]
pub struct LevelStats {
    pub games: usize,
    pub correct: usize,
}

impl LevelStats {
    pub fn accuracy(&self) -> Option<f64> {
        (self.games > 0).then(|| self.correct as f64 / self.games as f64)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EvalReport {
    pub seed: u64,
    pub games: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Indexed like [`LEVEL_BUCKETS`].
    pub levels: [LevelStats; 4],
    pub hard_games: usize,
    pub hard_accuracy: f64,
    pub mean_gain: f64,
    pub validity: f64,
    pub results: Vec<GameResult>,
}

impl EvalReport {
    pub fn level_accuracy(&self, bucket: usize) -> Option<f64> {
        self.levels[bucket].accuracy()
    }

    fn from_results(seed: u64, results: Vec<GameResult>) -> Self {
        let n = results.len();
        let mut levels = [LevelStats::default(); 4];
        for r in &results {
            let b = &mut levels[level_bucket(r.target_level)];
            b.games += 1;
            b.correct += r.correct as usize;
        }
        let correct = results.iter().filter(|r| r.correct).count();
        let mut by_difficulty: Vec<&GameResult> = results.iter().collect();
        by_difficulty.sort_by(|a, b| b.difficulty.total_cmp(&a.difficulty).then(a.index.cmp(&b.index)));
        let hard_games = n.div_ceil(10);
        let hard_correct = by_difficulty[..hard_games].iter().filter(|r| r.correct).count();
        EvalReport {
            seed,
            games: n,
            correct,
            accuracy: correct as f64 / n as f64,
            levels,
            hard_games,
            hard_accuracy: hard_correct as f64 / hard_games as f64,
            mean_gain: results.iter().map(|r| r.gain).sum::<f64>() / n as f64,
            validity: results.iter().filter(|r| r.valid).count() as f64 / n as f64,
            results,
        }
    }
}

/// Plays every game in evaluation mode. Game `i` draws its randomness from
/// [`game_rng`]`(seed, i)`, so the report depends only on the policies, the
/// games and the seed.
pub fn evaluate(
    teacher: &dyn TeacherPolicy,
    student: &dyn StudentPolicy,
    games: &[Arc<Game>],
    seed: u64,
) -> Result<EvalReport> {
    if games.is_empty() {
        return Err(Error::Argument("no games to evaluate".into()));
    }
    let mut results = Vec::with_capacity(games.len());
    for (index, game) in games.iter().enumerate() {
        let mut rng = game_rng(seed, index);
        let out = run_episode(teacher, student, game, Mode::Eval, None, &mut rng)
            .map_err(|e| e.with_context(format!("evaluation game {index}")))?;
        let first_message = out.state.messages[0];
        results.push(GameResult {
            index,
            target_level: game_levels(&game.candidates)?[game.target],
            difficulty: game.difficulty(),
            first_message,
            valid: game.target_instance().has(first_message),
            correct: out.state.correct(game),
            gain: out.state.gain,
        });
    }
    Ok(EvalReport::from_results(seed, results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{LiteralStudent, LiteralTeacher, RandomStudent};
    use crate::game::{sample_game, InstanceSpace};

    fn games(n: usize, seed: u64) -> Vec<Arc<Game>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Arc::new(sample_game(&InstanceSpace::number_set_4(), 4, &mut rng).unwrap()))
            .collect()
    }

    #[test]
    fn literal_pair_report_is_consistent() {
        let g = games(500, 1);
        let r = evaluate(&LiteralTeacher, &LiteralStudent, &g, 3).unwrap();
        assert_eq!(r.levels.iter().map(|l| l.games).sum::<usize>(), 500);
        assert_eq!(r.levels.iter().map(|l| l.correct).sum::<usize>(), r.correct);
        assert_eq!(r.level_accuracy(0), Some(1.0));
        assert_eq!(r.validity, 1.0);
        assert_eq!(r.hard_games, 50);
        assert!((0.0..=1.0).contains(&r.hard_accuracy));
        assert_eq!(r, evaluate(&LiteralTeacher, &LiteralStudent, &g, 3).unwrap());
    }

    #[test]
    fn random_student_is_at_chance() {
        let g = games(10_000, 2);
        let r = evaluate(&LiteralTeacher, &RandomStudent, &g, 4).unwrap();
        let sd = (0.25 * 0.75 / 10_000f64).sqrt();
        assert!((r.accuracy - 0.25).abs() < 4.0 * sd, "{}", r.accuracy);
    }

    #[test]
    fn empty_set_is_argument_error() {
        assert!(matches!(
            evaluate(&LiteralTeacher, &LiteralStudent, &[], 0),
            Err(Error::Argument(_))
        ));
    }
}
