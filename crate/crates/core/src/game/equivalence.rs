use rand::seq::SliceRandom;
use rand::Rng;

use super::game::Game;
use super::space::{Instance, InstanceSpace};
use crate::error::{Error, Result};

/// A bijection on attribute indices, `attr -> forward[attr]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeMap {
    forward: Vec<usize>,
}

impl AttributeMap {
    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut seen = vec![false; n];
        for &a in &forward {
            if a >= n || seen[a] {
                return Err(Error::Config(format!("attribute map {forward:?} is not a bijection")));
            }
            seen[a] = true;
        }
        Ok(AttributeMap { forward })
    }

    pub fn identity(vocab: usize) -> Self {
        AttributeMap {
            forward: (0..vocab).collect(),
        }
    }

    /// `a -> (a + k) mod vocab`.
    pub fn shift(vocab: usize, k: usize) -> Self {
        AttributeMap {
            forward: (0..vocab).map(|a| (a + k) % vocab).collect(),
        }
    }

    /// A uniformly random bijection that keeps every category block of the
    /// space in place.
    pub fn random<R: Rng + ?Sized>(space: &InstanceSpace, rng: &mut R) -> Self {
        let mut forward: Vec<usize> = (0..space.vocab()).collect();
        for block in space.blocks() {
            forward[block].shuffle(rng);
        }
        AttributeMap { forward }
    }

    pub fn vocab(&self) -> usize {
        self.forward.len()
    }

    pub fn map(&self, attr: usize) -> usize {
        self.forward[attr]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.forward.len()];
        for (a, &b) in self.forward.iter().enumerate() {
            inv[b] = a;
        }
        AttributeMap { forward: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(a, &b)| a == b)
    }

    /// Rejects maps that move attributes across category blocks.
    pub fn check_space(&self, space: &InstanceSpace) -> Result<()> {
        if self.vocab() != space.vocab() {
            return Err(Error::Config(format!(
                "attribute map over {} symbols for a space of {}",
                self.vocab(),
                space.vocab()
            )));
        }
        for block in space.blocks() {
            if block.clone().any(|a| !block.contains(&self.forward[a])) {
                return Err(Error::Config("attribute map crosses category blocks".into()));
            }
        }
        Ok(())
    }

    pub fn map_instance(&self, inst: &Instance) -> Instance {
        Instance::new(inst.vocab(), inst.attrs().iter().map(|&a| self.forward[a]).collect())
            .expect("a bijection keeps an instance valid")
    }
}

/// Relabels every candidate's attributes; target and presentation orders are kept.
pub fn apply_equivalence(game: &Game, map: &AttributeMap) -> Result<Game> {
    if map.vocab() != game.vocab() {
        return Err(Error::Config(format!(
            "attribute map over {} symbols for vocabulary {}",
            map.vocab(),
            game.vocab()
        )));
    }
    let mut out = game.clone();
    out.candidates = game.candidates.iter().map(|c| map.map_instance(c)).collect();
    Ok(out)
}
