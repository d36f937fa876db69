use rand::{Rng, RngCore};

use crate::belief::{literal_update, Belief};
use crate::error::Result;
use crate::game::{Action, Game, Instance};
use crate::trainer::{StudentPolicy, TeacherPolicy};

const TIE_TOLERANCE: f64 = 1e-12;

/// Names the target attribute that maximizes the target's literal posterior
/// under the current estimate; ties go to the smallest attribute.
#[derive(Clone, Copy, Debug, Default)]
pub struct LiteralTeacher;

impl LiteralTeacher {
    pub fn best_message(&self, candidates: &[&Instance], target: usize, estimate: &Belief) -> Result<usize> {
        let mut best = (0, f64::NEG_INFINITY);
        for &m in candidates[target].attrs() {
            let p = literal_update(candidates, estimate, m)?.probs()[target];
            if p > best.1 {
                best = (m, p);
            }
        }
        Ok(best.0)
    }
}

impl TeacherPolicy for LiteralTeacher {
    fn choose_message(&self, c: &[&Instance], t: usize, e: &Belief, _: bool, _: &mut dyn RngCore) -> Result<usize> {
        self.best_message(c, t, e)
    }

    fn predict_belief(&self, candidates: &[&Instance], prior: &Belief, message: usize) -> Result<Belief> {
        literal_update(candidates, prior, message)
    }
}

fn maximizers(p: &[f64]) -> Vec<usize> {
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..p.len()).filter(|&i| p[i] >= max - TIE_TOLERANCE).collect()
}

/// Picks a most probable candidate under the literal update, breaking ties
/// uniformly at random. Never waits.
#[derive(Clone, Copy, Debug, Default)]
pub struct LiteralStudent;

impl StudentPolicy for LiteralStudent {
    fn respond(&self, c: &[&Instance], prior: &Belief, m: usize, _: bool, rng: &mut dyn RngCore) -> Result<(Action, Belief)> {
        let post = literal_update(c, prior, m)?;
        let best = maximizers(post.probs());
        let pick = best[rng.gen_range(0..best.len())];
        Ok((Action::Pick(pick), post))
    }
}

/// Exact success probability of the literal pair on a one-round game.
pub fn literal_expected_accuracy(game: &Game) -> Result<f64> {
    let cands: Vec<&Instance> = game.candidates.iter().collect();
    let prior = Belief::uniform(cands.len());
    let m = LiteralTeacher.best_message(&cands, game.target, &prior)?;
    let best = maximizers(literal_update(&cands, &prior, m)?.probs());
    Ok(if best.contains(&game.target) { 1.0 / best.len() as f64 } else { 0.0 })
}

/// Picks a candidate uniformly at random.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomStudent;

impl StudentPolicy for RandomStudent {
    fn respond(&self, c: &[&Instance], prior: &Belief, _: usize, _: bool, rng: &mut dyn RngCore) -> Result<(Action, Belief)> {
        Ok((Action::Pick(rng.gen_range(0..c.len())), prior.clone()))
    }
}

/// Always sends the same message.
#[derive(Clone, Copy, Debug)]
pub struct ConstantTeacher(pub usize);

impl TeacherPolicy for ConstantTeacher {
    fn choose_message(&self, _: &[&Instance], _: usize, _: &Belief, _: bool, _: &mut dyn RngCore) -> Result<usize> {
        Ok(self.0)
    }

    fn predict_belief(&self, candidates: &[&Instance], prior: &Belief, message: usize) -> Result<Belief> {
        literal_update(candidates, prior, message)
    }
}
