use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::space::{Instance, InstanceSpace};
use crate::error::{Error, Result};

/// Cost charged for every message sent.
pub const DEFAULT_MESSAGE_COST: f64 = 0.1;

/// One referential game.
///
/// `candidates` is the canonical order. Each agent sees its own presentation:
/// position `j` of an agent's view is canonical candidate `perm[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Game {
    pub candidates: Vec<Instance>,
    pub target: usize,
    pub teacher_perm: Vec<usize>,
    pub student_perm: Vec<usize>,
    pub message_cost: f64,
    pub max_rounds: usize,
}

impl Game {
    pub fn new(candidates: Vec<Instance>, target: usize) -> Result<Self> {
        let k = candidates.len();
        let g = Game {
            candidates,
            target,
            teacher_perm: (0..k).collect(),
            student_perm: (0..k).collect(),
            message_cost: DEFAULT_MESSAGE_COST,
            max_rounds: 1,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn vocab(&self) -> usize {
        self.candidates[0].vocab()
    }

    pub fn target_instance(&self) -> &Instance {
        &self.candidates[self.target]
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.candidates.len();
        if k == 0 {
            return Err(Error::Data("game without candidates".into()));
        }
        if self.target >= k {
            return Err(Error::Data(format!("target index {} out of range for {k} candidates", self.target)));
        }
        let vocab = self.candidates[0].vocab();
        if self.candidates.iter().any(|c| c.vocab() != vocab) {
            return Err(Error::Data("candidates disagree on vocabulary size".into()));
        }
        for i in 0..k {
            for j in i + 1..k {
                if self.candidates[i] == self.candidates[j] {
                    return Err(Error::Data(format!("candidates {i} and {j} are identical")));
                }
            }
        }
        for (who, perm) in [("teacher", &self.teacher_perm), ("student", &self.student_perm)] {
            if !is_permutation(perm, k) {
                return Err(Error::Data(format!("{who} permutation {perm:?} is not a bijection on 0..{k}")));
            }
        }
        if !(self.message_cost.is_finite() && self.message_cost >= 0.0) {
            return Err(Error::Data(format!("invalid message cost {}", self.message_cost)));
        }
        if self.max_rounds == 0 {
            return Err(Error::Data("max_rounds must be positive".into()));
        }
        Ok(())
    }

    /// Candidates in the order given by `perm`.
    pub fn view(&self, perm: &[usize]) -> Vec<&Instance> {
        perm.iter().map(|&i| &self.candidates[i]).collect()
    }

    /// Canonical index of the target inside the view given by `perm`.
    pub fn target_in_view(&self, perm: &[usize]) -> usize {
        perm.iter().position(|&i| i == self.target).expect("valid permutation")
    }

    /// Order-independent identity of the candidate set.
    pub fn fingerprint(&self) -> Vec<Instance> {
        let mut c = self.candidates.clone();
        c.sort();
        c
    }

    /// Mean cosine similarity between the target and each distractor.
    pub fn difficulty(&self) -> f64 {
        let t = self.target_instance();
        let k = self.candidates.len();
        if k < 2 {
            return 0.0;
        }
        self.candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.target)
            .map(|(_, c)| cosine_similarity(t, c))
            .sum::<f64>()
            / (k - 1) as f64
    }
}

/// Cosine similarity of two multi-hot vectors.
pub fn cosine_similarity(a: &Instance, b: &Instance) -> f64 {
    let shared = a.attrs().iter().filter(|x| b.has(**x)).count() as f64;
    shared / ((a.attrs().len() * b.attrs().len()) as f64).sqrt()
}

fn is_permutation(perm: &[usize], k: usize) -> bool {
    if perm.len() != k {
        return false;
    }
    let mut seen = vec![false; k];
    for &p in perm {
        if p >= k || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

/// Samples a game over a whole space.
pub fn sample_game<R: Rng + ?Sized>(space: &InstanceSpace, k: usize, rng: &mut R) -> Result<Game> {
    let pool = space.enumerate()?;
    sample_game_from(&pool, k, rng)
}

/// Samples `k` distinct candidates uniformly without replacement from `pool`,
/// a uniform target, and independent presentation orders for both agents.
pub fn sample_game_from<R: Rng + ?Sized>(pool: &[Instance], k: usize, rng: &mut R) -> Result<Game> {
    if k == 0 || k > pool.len() {
        return Err(Error::Config(format!(
            "cannot sample {k} distinct candidates from {} instances",
            pool.len()
        )));
    }
    let candidates: Vec<Instance> = index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect();
    let target = rng.gen_range(0..k);
    let mut teacher_perm: Vec<usize> = (0..k).collect();
    teacher_perm.shuffle(rng);
    let mut student_perm: Vec<usize> = (0..k).collect();
    student_perm.shuffle(rng);
    Ok(Game {
        candidates,
        target,
        teacher_perm,
        student_perm,
        message_cost: DEFAULT_MESSAGE_COST,
        max_rounds: 1,
    })
}
