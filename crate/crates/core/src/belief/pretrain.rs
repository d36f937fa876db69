use rand::Rng;

use super::{literal_update, Belief, BeliefNet};
use crate::error::{Error, Result};
use crate::game::{sample_game_from, Instance};
use crate::kernel::{cross_entropy, cross_entropy_grad, Optimizer, Tensor2D};

/// One supervised example: candidates, a uniform prior and a message.
#[derive(Clone, Debug)]
pub struct PretrainCase {
    pub candidates: Vec<Instance>,
    pub message: usize,
}

/// Draws `k` candidates from `pool` and a message uniformly from all
/// `messages`. Messages no candidate carries are included on purpose: their
/// literal posterior is the prior, and a network never shown them answers
/// them arbitrarily.
pub fn sample_pretrain_case<R: Rng + ?Sized>(
    pool: &[Instance],
    k: usize,
    messages: usize,
    rng: &mut R,
) -> Result<PretrainCase> {
    if messages == 0 {
        return Err(Error::Argument("empty message space".into()));
    }
    let game = sample_game_from(pool, k, rng)?;
    let message = rng.gen_range(0..messages);
    Ok(PretrainCase {
        candidates: game.candidates,
        message,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PretrainReport {
    pub steps: usize,
    pub final_loss: f64,
    pub heldout_l1: f64,
}

/// Mean L1 distance between the network's posterior and the literal posterior
/// under a uniform prior.
pub fn mean_l1_vs_literal(net: &BeliefNet, cases: &[PretrainCase]) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::Argument("no held-out cases".into()));
    }
    let mut total = 0.0;
    for case in cases {
        let prior = Belief::uniform(case.candidates.len());
        let truth = literal_update(&case.candidates, &prior, case.message)?;
        let pred = net.update(&case.candidates, &prior, case.message)?;
        total += truth.l1(&pred);
    }
    Ok(total / cases.len() as f64)
}

/// Fits the belief network to the literal Bayesian update with a
/// cross-entropy loss. Each step averages the gradient over `batch` fresh
/// cases; the report's held-out error is measured on `heldout`.
#[allow(clippy::too_many_arguments)]
pub fn pretrain_bayesian<R: Rng + ?Sized>(
    net: &mut BeliefNet,
    pool: &[Instance],
    k: usize,
    steps: usize,
    batch: usize,
    optimizer: &Optimizer,
    heldout: &[PretrainCase],
    rng: &mut R,
) -> Result<PretrainReport> {
    let batch = batch.max(1);
    let mut final_loss = f64::NAN;
    for step in 0..steps {
        let mut loss_sum = 0.0;
        for _ in 0..batch {
            let case = sample_pretrain_case(pool, k, net.config().messages, rng)?;
            let prior = Belief::uniform(k);
            let truth = literal_update(&case.candidates, &prior, case.message)?;
            let trace = net.encode(&case.candidates)?;
            let head = net.head(trace.embedding(), &prior, case.message)?;
            loss_sum += cross_entropy(truth.probs(), &head.posterior)?;
            let d_post = cross_entropy_grad(truth.probs(), &head.posterior);
            let d_logits = BeliefNet::head_backward(&head, &prior, &d_post);
            let mut d_e = Tensor2D::zeros(k, net.config().messages);
            BeliefNet::scatter_logit_grad(&mut d_e, case.message, &d_logits);
            net.encode_backward(&trace, &d_e)?;
        }
        final_loss = loss_sum / batch as f64;
        if !final_loss.is_finite() {
            return Err(Error::Numeric(format!("pretraining loss at step {step}")));
        }
        net.params.scale_grads(1.0 / batch as f64);
        net.params.step(optimizer)?;
    }
    let heldout_l1 = if heldout.is_empty() {
        f64::NAN
    } else {
        mean_l1_vs_literal(net, heldout)?
    };
    Ok(PretrainReport {
        steps,
        final_loss,
        heldout_l1,
    })
}
