use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::report::game_rng;
use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::game::{AttributeMap, Game, Instance, InstanceSpace};
use crate::trainer::{run_episode, Mode, StudentPolicy, TeacherPolicy};

/// Where the relabeling of each stability game comes from.
#[derive(Clone, Debug)]
pub enum SigmaFamily {
    Identity,
    /// A fresh uniformly random bijection per game, within category blocks.
    Random(InstanceSpace),
    Fixed(AttributeMap),
}

impl SigmaFamily {
    /// A fixed map, checked against the category blocks of `space`.
    pub fn fixed(map: AttributeMap, space: &InstanceSpace) -> Result<Self> {
        map.check_space(space)?;
        Ok(SigmaFamily::Fixed(map))
    }

    fn draw(&self, vocab: usize, rng: &mut ChaCha8Rng) -> Result<AttributeMap> {
        let map = match self {
            SigmaFamily::Identity => AttributeMap::identity(vocab),
            SigmaFamily::Random(space) => AttributeMap::random(space, rng),
            SigmaFamily::Fixed(m) => m.clone(),
        };
        if map.vocab() != vocab {
            return Err(Error::Config(format!(
                "relabeling over {} symbols for vocabulary {vocab}",
                map.vocab()
            )));
        }
        Ok(map)
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct StabilityReport {
    pub games: usize,
    pub mapped_accuracy: f64,
    pub unmapped_accuracy: f64,
}

/// Plays each game twice: once as is, once with the student shown relabeled
/// candidates and a relabeled message. Both runs of game `i` share the same
/// random stream.
pub fn stability_eval(
    teacher: &dyn TeacherPolicy,
    student: &dyn StudentPolicy,
    games: &[Arc<Game>],
    family: &SigmaFamily,
    seed: u64,
) -> Result<StabilityReport> {
    if games.is_empty() {
        return Err(Error::Argument("no games to evaluate".into()));
    }
    if let SigmaFamily::Random(space) = family {
        space.validate()?;
    }
    let (mut mapped, mut unmapped) = (0usize, 0usize);
    for (i, game) in games.iter().enumerate() {
        let mut sigma_rng = game_rng(seed, i);
        sigma_rng.set_stream(1 << 63 | i as u64);
        let sigma = family.draw(game.vocab(), &mut sigma_rng)?;
        let plain = run_episode(teacher, student, game, Mode::Eval, None, &mut game_rng(seed, i))?;
        let relabeled = run_episode(teacher, student, game, Mode::Eval, Some(&sigma), &mut game_rng(seed, i))?;
        unmapped += plain.state.correct(game) as usize;
        mapped += relabeled.state.correct(game) as usize;
    }
    let n = games.len() as f64;
    Ok(StabilityReport {
        games: games.len(),
        mapped_accuracy: mapped as f64 / n,
        unmapped_accuracy: unmapped as f64 / n,
    })
}

/// Fraction of games whose first greedy message is an attribute of the target.
pub fn validity_eval(teacher: &dyn TeacherPolicy, games: &[Arc<Game>]) -> Result<f64> {
    if games.is_empty() {
        return Err(Error::Argument("no games to evaluate".into()));
    }
    let mut valid = 0;
    for (i, game) in games.iter().enumerate() {
        let perm = &game.teacher_perm;
        let cands = game.view(perm);
        let estimate = Belief::uniform(cands.len());
        let m = teacher.choose_message(&cands, game.target_in_view(perm), &estimate, true, &mut game_rng(0, i))?;
        valid += game.target_instance().has(m) as usize;
    }
    Ok(valid as f64 / games.len() as f64)
}

/// Games whose target is one of `heldout`.
pub fn heldout_target_games(games: &[Arc<Game>], heldout: &[Instance]) -> Vec<Arc<Game>> {
    let set: HashSet<&Instance> = heldout.iter().collect();
    games.iter().filter(|g| set.contains(g.target_instance())).cloned().collect()
}

/// Fails with the first candidate set (as an unordered set) found in both splits.
pub fn check_exclusive<'a>(
    a: impl IntoIterator<Item = &'a Game>,
    b: impl IntoIterator<Item = &'a Game>,
) -> Result<()> {
    let seen: HashSet<Vec<Instance>> = a.into_iter().map(Game::fingerprint).collect();
    for (line, g) in b.into_iter().enumerate() {
        let fp = g.fingerprint();
        if seen.contains(&fp) {
            let sets: Vec<&[usize]> = fp.iter().map(Instance::attrs).collect();
            return Err(Error::Data(format!(
                "candidate set {sets:?} (game {}) appears in both splits",
                line + 1
            )));
        }
    }
    Ok(())
}

/// Cross-covariance between the one-hot message (rows) and the presence of
/// each attribute among the distractors (columns), averaged over targets.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CovarianceMatrix {
    pub vocab: usize,
    pub targets: usize,
    pub games_per_target: usize,
    /// Row-major `vocab x vocab`.
    pub data: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn get(&self, message: usize, attr: usize) -> f64 {
        self.data[message * self.vocab + attr]
    }

    pub fn mean_diagonal(&self) -> f64 {
        (0..self.vocab).map(|i| self.get(i, i)).sum::<f64>() / self.vocab as f64
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.vocab)
    }
}

/// For each target, plays `games_per_target` first rounds against fresh
/// distractors drawn from `pool` and measures the sample covariance.
pub fn covariance_analysis(
    teacher: &dyn TeacherPolicy,
    targets: &[Instance],
    pool: &[Instance],
    candidates: usize,
    games_per_target: usize,
    seed: u64,
) -> Result<CovarianceMatrix> {
    if games_per_target < 2 {
        return Err(Error::Argument("covariance needs at least two games per target".into()));
    }
    if targets.is_empty() || candidates < 2 {
        return Err(Error::Argument("covariance needs targets and at least two candidates".into()));
    }
    let v = targets[0].vocab();
    let g = games_per_target as f64;
    let mut total = vec![0.0; v * v];
    for (ti, target) in targets.iter().enumerate() {
        let others: Vec<&Instance> = pool.iter().filter(|p| *p != target).collect();
        if others.len() < candidates - 1 {
            return Err(Error::Argument("pool too small for the requested candidate count".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ti as u64);
        let mut u_sum = vec![0.0; v];
        let mut x_sum = vec![0.0; v];
        let mut ux_sum = vec![0.0; v * v];
        for _ in 0..games_per_target {
            let mut cands: Vec<Instance> = index::sample(&mut rng, others.len(), candidates - 1)
                .into_iter()
                .map(|i| others[i].clone())
                .collect();
            let pos = rng.gen_range(0..candidates);
            cands.insert(pos, target.clone());
            let mut game = Game::new(cands, pos)?;
            game.teacher_perm.shuffle(&mut rng);
            let perm = &game.teacher_perm;
            let view = game.view(perm);
            let m = teacher.choose_message(&view, game.target_in_view(perm), &Belief::uniform(candidates), true, &mut rng)?;
            let mut present = vec![0.0; v];
            for (i, c) in game.candidates.iter().enumerate() {
                if i != pos {
                    for &a in c.attrs() {
                        present[a] = 1.0;
                    }
                }
            }
            u_sum[m] += 1.0;
            for a in 0..v {
                x_sum[a] += present[a];
                ux_sum[m * v + a] += present[a];
            }
        }
        for j in 0..v {
            for a in 0..v {
                total[j * v + a] += (ux_sum[j * v + a] - u_sum[j] * x_sum[a] / g) / (g - 1.0);
            }
        }
    }
    let n = targets.len() as f64;
    Ok(CovarianceMatrix {
        vocab: v,
        targets: targets.len(),
        games_per_target,
        data: total.into_iter().map(|c| c / n).collect(),
    })
}
