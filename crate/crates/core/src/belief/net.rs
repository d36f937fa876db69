use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Belief;
use crate::error::{Error, Result};
use crate::game::Instance;
use crate::kernel::{
    concat_context, concat_context_backward, sigmoid, Activation, Linear, ParamStore, Tensor2D,
};

/// Added to every unnormalized posterior weight before normalizing.
pub const POSTERIOR_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefNetConfig {
    /// Attributes per candidate (input width).
    pub vocab: usize,
    /// Message-space size; also the width of the final candidate embedding.
    pub messages: usize,
    pub hidden: usize,
    /// Number of (per-candidate linear, context concat, per-candidate linear) blocks.
    pub depth: usize,
}

impl BeliefNetConfig {
    pub fn new(vocab: usize) -> Self {
        BeliefNetConfig {
            vocab,
            messages: vocab,
            hidden: 64,
            depth: 2,
        }
    }
}

#[derive(Clone, Debug)]
struct Block {
    pre: Linear,
    post: Linear,
    last: bool,
}

/// Learned belief update `f(O, b, m)`.
///
/// Every candidate is encoded by blocks of a shared linear map, a context
/// concatenation (sum over candidates) and a second shared linear map. The
/// last block emits one logit per message; the logit selected by the message
/// goes through a sigmoid to give `P(m | o)`, which multiplies the prior.
#[derive(Clone, Debug)]
pub struct BeliefNet {
    pub params: ParamStore,
    config: BeliefNetConfig,
    blocks: Vec<Block>,
    activation: Activation,
}

/// Intermediate values of one encoder pass, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct EncoderTrace {
    inputs: Vec<Tensor2D>,
    pre_out: Vec<Tensor2D>,
    ctx: Vec<Tensor2D>,
    post_out: Vec<Tensor2D>,
}

impl EncoderTrace {
    /// Final candidate embeddings, `K x messages`.
    pub fn embedding(&self) -> &Tensor2D {
        self.post_out.last().expect("encoder has at least one block")
    }
}

/// Intermediate values of the message head.
#[derive(Clone, Debug)]
pub struct HeadTrace {
    pub message: usize,
    pub likelihood: Vec<f64>,
    pub normalizer: f64,
    pub posterior: Vec<f64>,
}

impl BeliefNet {
    pub fn new<R: Rng + ?Sized>(config: BeliefNetConfig, rng: &mut R) -> Result<Self> {
        Self::with_prefix(config, "belief", rng)
    }

    /// Parameter names are prefixed with `prefix`.
    pub fn with_prefix<R: Rng + ?Sized>(config: BeliefNetConfig, prefix: &str, rng: &mut R) -> Result<Self> {
        if config.vocab == 0 || config.messages == 0 || config.hidden == 0 || config.depth == 0 {
            return Err(Error::Config(format!("degenerate belief net config {config:?}")));
        }
        let mut params = ParamStore::new();
        let mut blocks = Vec::with_capacity(config.depth);
        let mut d_in = config.vocab;
        for j in 0..config.depth {
            let last = j + 1 == config.depth;
            let d_out = if last { config.messages } else { config.hidden };
            let pre = Linear::new(&mut params, &format!("{prefix}.block{j}.pre"), d_in, config.hidden, rng);
            let post = Linear::new(&mut params, &format!("{prefix}.block{j}.post"), 2 * config.hidden, d_out, rng);
            blocks.push(Block { pre, post, last });
            d_in = d_out;
        }
        Ok(BeliefNet {
            params,
            config,
            blocks,
            activation: Activation::Tanh,
        })
    }

    pub fn config(&self) -> &BeliefNetConfig {
        &self.config
    }

    fn input_tensor<C: AsRef<Instance>>(&self, candidates: &[C]) -> Result<Tensor2D> {
        let mut t = Tensor2D::zeros(candidates.len(), self.config.vocab);
        for (k, c) in candidates.iter().enumerate() {
            let c = c.as_ref();
            if c.vocab() != self.config.vocab {
                return Err(Error::Config(format!(
                    "belief net built for vocabulary {} given candidates over {}",
                    self.config.vocab,
                    c.vocab()
                )));
            }
            for &a in c.attrs() {
                t.set(k, a, 1.0);
            }
        }
        Ok(t)
    }

    /// Candidate embeddings (`K x messages`) with the trace needed by
    /// [`BeliefNet::encode_backward`].
    pub fn encode<C: AsRef<Instance>>(&self, candidates: &[C]) -> Result<EncoderTrace> {
        if candidates.is_empty() {
            return Err(Error::dim("BeliefNet::encode", "at least one candidate", 0));
        }
        let mut x = self.input_tensor(candidates)?;
        let mut trace = EncoderTrace {
            inputs: Vec::with_capacity(self.blocks.len()),
            pre_out: Vec::with_capacity(self.blocks.len()),
            ctx: Vec::with_capacity(self.blocks.len()),
            post_out: Vec::with_capacity(self.blocks.len()),
        };
        for block in &self.blocks {
            let a = self.activation.apply(&block.pre.forward(&self.params, &x)?);
            let z = concat_context(&a);
            let mut y = block.post.forward(&self.params, &z)?;
            if !block.last {
                y = self.activation.apply(&y);
            }
            trace.inputs.push(x);
            trace.pre_out.push(a);
            trace.ctx.push(z);
            trace.post_out.push(y.clone());
            x = y;
        }
        Ok(trace)
    }

    /// Accumulates parameter gradients given the gradient of the loss with
    /// respect to the final embeddings.
    pub fn encode_backward(&mut self, trace: &EncoderTrace, grad_embedding: &Tensor2D) -> Result<()> {
        let mut g = grad_embedding.clone();
        for (j, block) in self.blocks.iter().enumerate().rev() {
            if !block.last {
                g = self.activation.backward(&trace.post_out[j], &g);
            }
            let g_ctx = block.post.backward(&mut self.params, &trace.ctx[j], &g)?;
            let g_a = concat_context_backward(&g_ctx);
            let g_pre = self.activation.backward(&trace.pre_out[j], &g_a);
            g = block.pre.backward(&mut self.params, &trace.inputs[j], &g_pre)?;
        }
        Ok(())
    }

    /// Posterior from precomputed embeddings: `prior * sigmoid(E[:, m]) + floor`, normalized.
    pub fn head(&self, embedding: &Tensor2D, prior: &Belief, message: usize) -> Result<HeadTrace> {
        if prior.len() != embedding.rows() {
            return Err(Error::dim("BeliefNet::head", embedding.rows(), prior.len()));
        }
        if message >= self.config.messages {
            return Err(Error::Config(format!(
                "message {message} outside message space of {}",
                self.config.messages
            )));
        }
        let likelihood: Vec<f64> = (0..embedding.rows())
            .map(|k| sigmoid(embedding.get(k, message)))
            .collect();
        let unnorm: Vec<f64> = likelihood
            .iter()
            .zip(prior.probs())
            .map(|(l, p)| p * l + POSTERIOR_FLOOR)
            .collect();
        let normalizer: f64 = unnorm.iter().sum();
        let posterior = unnorm.iter().map(|u| u / normalizer).collect();
        Ok(HeadTrace {
            message,
            likelihood,
            normalizer,
            posterior,
        })
    }

    /// Gradient of the loss with respect to the message logits `E[:, m]`,
    /// given its gradient with respect to the posterior.
    pub fn head_backward(trace: &HeadTrace, prior: &Belief, grad_posterior: &[f64]) -> Vec<f64> {
        let inner: f64 = grad_posterior
            .iter()
            .zip(&trace.posterior)
            .map(|(g, p)| g * p)
            .sum();
        grad_posterior
            .iter()
            .zip(prior.probs())
            .zip(&trace.likelihood)
            .map(|((g, p), l)| (g - inner) / trace.normalizer * p * l * (1.0 - l))
            .collect()
    }

    /// Scatters message-logit gradients into a full embedding gradient.
    pub fn scatter_logit_grad(grad_embedding: &mut Tensor2D, message: usize, grad_logits: &[f64]) {
        for (k, g) in grad_logits.iter().enumerate() {
            let v = grad_embedding.get(k, message) + g;
            grad_embedding.set(k, message, v);
        }
    }

    /// `f(O, b, m)`: candidates in the caller's presentation order.
    pub fn update<C: AsRef<Instance>>(&self, candidates: &[C], prior: &Belief, message: usize) -> Result<Belief> {
        if candidates.len() != prior.len() {
            return Err(Error::dim("BeliefNet::update", candidates.len(), prior.len()));
        }
        let trace = self.encode(candidates)?;
        let head = self.head(trace.embedding(), prior, message)?;
        Ok(Belief::from_raw(head.posterior))
    }
}
