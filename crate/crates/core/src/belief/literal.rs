use super::Belief;
use crate::error::{Error, Result};
use crate::game::Instance;

/// Likelihood of a message for a candidate that lacks the named attribute.
pub const LITERAL_FLOOR: f64 = 1e-6;

/// `1` if the candidate carries attribute `message`, else [`LITERAL_FLOOR`].
pub fn literal_likelihood(candidate: &Instance, message: usize) -> f64 {
    if candidate.has(message) {
        1.0
    } else {
        LITERAL_FLOOR
    }
}

/// Exact Bayesian posterior of a literal listener: prior times consistency
/// likelihood, renormalized. A message no candidate carries leaves the prior
/// (almost) unchanged.
pub fn literal_update<C: AsRef<Instance>>(candidates: &[C], prior: &Belief, message: usize) -> Result<Belief> {
    if candidates.len() != prior.len() {
        return Err(Error::dim("literal_update", candidates.len(), prior.len()));
    }
    let weights: Vec<f64> = candidates
        .iter()
        .zip(prior.probs())
        .map(|(c, p)| p * literal_likelihood(c.as_ref(), message))
        .collect();
    Belief::from_weights(weights)
}

impl AsRef<Instance> for Instance {
    fn as_ref(&self) -> &Instance {
        self
    }
}
