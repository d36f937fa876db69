//! Beliefs over candidates: the exact literal Bayesian update, the learned
//! belief-update network shared by both agents, and Bayesian pretraining.

mod literal;
mod net;
mod pretrain;

pub use literal::{literal_likelihood, literal_update, LITERAL_FLOOR};
pub use net::{BeliefNet, BeliefNetConfig, EncoderTrace, HeadTrace, POSTERIOR_FLOOR};
pub use pretrain::{mean_l1_vs_literal, pretrain_bayesian, sample_pretrain_case, PretrainCase, PretrainReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability distribution over the candidates of a game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Belief(Vec<f64>);

impl Belief {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::dim("Belief::new", "non-empty", 0));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Numeric(format!("belief entries {probs:?}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::Argument(format!("belief sums to {s}")));
        }
        Ok(Belief(probs))
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(w: Vec<f64>) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Numeric(format!("cannot normalize weights {w:?}")));
        }
        Belief::new(w.into_iter().map(|x| x / s).collect())
    }

    pub fn uniform(k: usize) -> Self {
        Belief(vec![1.0 / k as f64; k])
    }

    pub fn one_hot(k: usize, i: usize) -> Self {
        let mut v = vec![0.0; k];
        v[i] = 1.0;
        Belief(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// First index of the maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn entropy(&self) -> f64 {
        -self.0.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    pub fn l1(&self, other: &Belief) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Canonical belief reordered into the view given by `perm`.
    pub fn to_view(&self, perm: &[usize]) -> Belief {
        Belief(perm.iter().map(|&i| self.0[i]).collect())
    }

    /// Inverse of [`Belief::to_view`].
    pub fn from_view(view: &Belief, perm: &[usize]) -> Belief {
        let mut v = vec![0.0; view.len()];
        for (j, &i) in perm.iter().enumerate() {
            v[i] = view.0[j];
        }
        Belief(v)
    }

    pub(crate) fn from_raw(v: Vec<f64>) -> Belief {
        Belief(v)
    }
}
