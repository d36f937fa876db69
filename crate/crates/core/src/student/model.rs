use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::belief::{Belief, BeliefNet, BeliefNetConfig, EncoderTrace, HeadTrace};
use crate::error::{Error, Result};
use crate::game::{Action, Game, Instance};
use crate::kernel::{argmax, sample_categorical, sigmoid, Linear, Optimizer, ParamStore, Tensor2D, PROB_EPS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentConfig {
    /// Number of candidates per game; fixes the gate's input width.
    pub candidates: usize,
    /// Constant subtracted from every return. Zero disables it.
    pub baseline: f64,
    /// Wait probability of the untrained gate, for every belief.
    pub initial_wait: f64,
}

impl StudentConfig {
    pub fn new(candidates: usize) -> Self {
        StudentConfig {
            candidates,
            baseline: 0.0,
            initial_wait: 0.05,
        }
    }
}

/// One round of a student trajectory. `prior` is in canonical order,
/// `action` in the student's presentation order.
#[derive(Clone, Debug)]
pub struct EpisodeStepRecord {
    pub game: Arc<Game>,
    pub prior: Belief,
    pub message: usize,
    pub action: Action,
    pub reward: f64,
}

/// Discounted suffix sums `R_t = sum_{k >= t} gamma^(k-t) r_k`.
pub fn returns(rewards: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::Protocol("returns of an empty episode".into()));
    }
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        out[t] = acc;
    }
    Ok(out)
}

/// The policy network `theta_B`.
///
/// The wait gate reads the updated belief sorted in decreasing order, so it
/// depends on how peaked the belief is and not on which candidate holds the
/// mass.
#[derive(Clone, Debug)]
pub struct StudentModel {
    pub belief: BeliefNet,
    pub gate_params: ParamStore,
    gate: Linear,
    pub config: StudentConfig,
}

/// Forward values for one policy evaluation, in the student's view.
#[derive(Clone, Debug)]
pub struct StudentTrace {
    pub head: HeadTrace,
    order: Vec<usize>,
    sorted: Tensor2D,
    pub wait: f64,
}

impl StudentTrace {
    /// `[(1 - w) b', w]`.
    pub fn distribution(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.head.posterior.iter().map(|b| (1.0 - self.wait) * b).collect();
        d.push(self.wait);
        d
    }

    pub fn belief(&self) -> Belief {
        Belief::from_raw(self.head.posterior.clone())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReinforceReport {
    /// `J` before the update.
    pub objective: f64,
    pub steps: usize,
    /// Chosen actions whose probability fell below the log clamp.
    pub clamped: usize,
}

impl StudentModel {
    pub fn new<R: Rng + ?Sized>(belief: BeliefNetConfig, config: StudentConfig, rng: &mut R) -> Result<Self> {
        if config.candidates == 0 {
            return Err(Error::Config("student needs at least one candidate".into()));
        }
        if !config.baseline.is_finite() {
            return Err(Error::Config("student baseline must be finite".into()));
        }
        if !(config.initial_wait > 0.0 && config.initial_wait < 1.0) {
            return Err(Error::Config(format!(
                "initial wait probability must lie in (0, 1), got {}",
                config.initial_wait
            )));
        }
        let belief_net = BeliefNet::with_prefix(belief, "student.belief", rng)?;
        let mut gate_params = ParamStore::new();
        let gate = Linear::new(&mut gate_params, "student.gate", config.candidates, 1, rng);
        gate_params.param_mut(gate.weight).value.fill(0.0);
        let w0 = config.initial_wait;
        gate_params.param_mut(gate.bias).value[0] = (w0 / (1.0 - w0)).ln();
        Ok(StudentModel {
            belief: belief_net,
            gate_params,
            gate,
            config,
        })
    }

    pub fn load_pretrained_belief(&mut self, pretrained: &BeliefNet) -> Result<()> {
        if pretrained.config() != self.belief.config() {
            return Err(Error::Config("pretrained belief net has a different shape".into()));
        }
        for (dst, src) in self.belief.params.iter_mut().zip(pretrained.params.iter()) {
            dst.value.copy_from_slice(&src.value);
        }
        Ok(())
    }

    pub fn stores(&self) -> [&ParamStore; 2] {
        [&self.belief.params, &self.gate_params]
    }

    pub fn stores_mut(&mut self) -> [&mut ParamStore; 2] {
        [&mut self.belief.params, &mut self.gate_params]
    }

    /// Wait probability for an updated belief.
    pub fn wait_probability(&self, belief: &[f64]) -> Result<f64> {
        Ok(self.gate_forward(belief)?.2)
    }

    fn gate_forward(&self, belief: &[f64]) -> Result<(Vec<usize>, Tensor2D, f64)> {
        if belief.len() != self.config.candidates {
            return Err(Error::dim("student gate", self.config.candidates, belief.len()));
        }
        let mut order: Vec<usize> = (0..belief.len()).collect();
        order.sort_by(|&a, &b| belief[b].total_cmp(&belief[a]).then(a.cmp(&b)));
        let sorted = Tensor2D::from_vec(1, belief.len(), order.iter().map(|&i| belief[i]).collect())?;
        let logit = self.gate.forward(&self.gate_params, &sorted)?.get(0, 0);
        Ok((order, sorted, sigmoid(logit)))
    }

    /// Accumulates gate gradients for `d(loss)/d(logit)` and returns the
    /// gradient with respect to the (unsorted) belief.
    fn gate_backward(&mut self, order: &[usize], sorted: &Tensor2D, d_logit: f64) -> Result<Vec<f64>> {
        let d_sorted = self
            .gate
            .backward(&mut self.gate_params, sorted, &Tensor2D::from_vec(1, 1, vec![d_logit])?)?;
        let mut d_belief = vec![0.0; order.len()];
        for (pos, &i) in order.iter().enumerate() {
            d_belief[i] = d_sorted.get(0, pos);
        }
        Ok(d_belief)
    }

    /// Supervised gate step towards `target_wait` with a logistic loss.
    /// Returns the loss before the step.
    pub fn fit_gate(&mut self, beliefs: &[(Vec<f64>, f64)], optimizer: &Optimizer) -> Result<f64> {
        let n = beliefs.len() as f64;
        let mut loss = 0.0;
        for (b, y) in beliefs {
            let (order, sorted, w) = self.gate_forward(b)?;
            loss -= (y * w.max(PROB_EPS).ln() + (1.0 - y) * (1.0 - w).max(PROB_EPS).ln()) / n;
            self.gate_backward(&order, &sorted, (w - y) / n)?;
        }
        self.gate_params.step(optimizer)?;
        Ok(loss)
    }

    /// Policy evaluation on candidates and prior in the student's own order.
    pub fn forward<C: AsRef<Instance>>(&self, candidates: &[C], prior: &Belief, message: usize) -> Result<(EncoderTrace, StudentTrace)> {
        let enc = self.belief.encode(candidates)?;
        let head = self.belief.head(enc.embedding(), prior, message)?;
        let (order, sorted, wait) = self.gate_forward(&head.posterior)?;
        Ok((
            enc,
            StudentTrace {
                head,
                order,
                sorted,
                wait,
            },
        ))
    }

    /// Distribution over `K` picks and wait, in the student's order.
    pub fn action_distribution<C: AsRef<Instance>>(&self, candidates: &[C], prior: &Belief, message: usize) -> Result<Vec<f64>> {
        Ok(self.forward(candidates, prior, message)?.1.distribution())
    }

    /// Plays one round of `game`. `prior` is canonical. Returns the action and
    /// the updated belief (canonical).
    pub fn act(&self, game: &Game, prior: &Belief, message: usize, greedy: bool, rng: &mut dyn RngCore) -> Result<(Action, Belief)> {
        let perm = &game.student_perm;
        let cands = game.view(perm);
        let (_, trace) = self.forward(&cands, &prior.to_view(perm), message)?;
        let dist = trace.distribution();
        let idx = if greedy { argmax(&dist) } else { sample_categorical(&dist, rng) };
        let action = if idx == cands.len() { Action::Wait } else { Action::Pick(idx) };
        Ok((action, Belief::from_view(&trace.belief(), perm)))
    }

    /// `log pi(a)` with the probability clamped at `PROB_EPS`.
    pub fn log_prob(&self, record: &EpisodeStepRecord) -> Result<f64> {
        let perm = &record.game.student_perm;
        let cands = record.game.view(perm);
        let (_, trace) = self.forward(&cands, &record.prior.to_view(perm), record.message)?;
        let p = action_prob(&trace, record.action)?;
        Ok(p.max(PROB_EPS).ln())
    }

    /// Accumulates the gradient of `weight * log pi(a)`. Returns
    /// `(log pi(a), clamped)`.
    fn accumulate_log_prob(&mut self, record: &EpisodeStepRecord, weight: f64) -> Result<(f64, bool)> {
        let perm = &record.game.student_perm;
        let cands = record.game.view(perm);
        let prior = record.prior.to_view(perm);
        let (enc, trace) = self.forward(&cands, &prior, record.message)?;
        let p = action_prob(&trace, record.action)?;
        if p < PROB_EPS {
            return Ok((PROB_EPS.ln(), true));
        }
        let dp = weight / p;
        let w = trace.wait;
        let (dw, mut d_post) = match record.action {
            Action::Wait => (dp, vec![0.0; cands.len()]),
            Action::Pick(j) => {
                let mut g = vec![0.0; cands.len()];
                g[j] = dp * (1.0 - w);
                (-dp * trace.head.posterior[j], g)
            }
        };
        let via_gate = self.gate_backward(&trace.order, &trace.sorted, dw * w * (1.0 - w))?;
        for (g, v) in d_post.iter_mut().zip(via_gate) {
            *g += v;
        }
        let d_logits = BeliefNet::head_backward(&trace.head, &prior, &d_post);
        let (k, d) = enc.embedding().shape();
        let mut d_emb = Tensor2D::zeros(k, d);
        BeliefNet::scatter_logit_grad(&mut d_emb, record.message, &d_logits);
        self.belief.encode_backward(&enc, &d_emb)?;
        Ok((p.ln(), false))
    }

    /// Gradient of `-J` accumulated into the stores without stepping.
    pub fn accumulate_objective(&mut self, episodes: &[Vec<EpisodeStepRecord>], gamma: f64) -> Result<ReinforceReport> {
        let steps: usize = episodes.iter().map(Vec::len).sum();
        if steps == 0 {
            return Err(Error::Training("REINFORCE step on an empty batch".into()));
        }
        let n = steps as f64;
        let mut report = ReinforceReport {
            steps,
            ..Default::default()
        };
        for ep in episodes {
            let rewards: Vec<f64> = ep.iter().map(|r| r.reward).collect();
            for (rec, ret) in ep.iter().zip(returns(&rewards, gamma)?) {
                let adv = ret - self.config.baseline;
                let (lp, clamped) = self.accumulate_log_prob(rec, -adv / n)?;
                report.objective += lp * adv / n;
                report.clamped += clamped as usize;
            }
        }
        if !report.objective.is_finite() {
            return Err(Error::Numeric("student objective".into()));
        }
        Ok(report)
    }

    /// One ascent step on `J = mean_t log pi(a_t) R_t`.
    pub fn reinforce_step(&mut self, episodes: &[Vec<EpisodeStepRecord>], optimizer: &Optimizer, gamma: f64) -> Result<ReinforceReport> {
        let report = self.accumulate_objective(episodes, gamma)?;
        self.belief.params.step(optimizer)?;
        self.gate_params.step(optimizer)?;
        Ok(report)
    }
}

fn action_prob(trace: &StudentTrace, action: Action) -> Result<f64> {
    match action {
        Action::Wait => Ok(trace.wait),
        Action::Pick(j) => trace
            .head
            .posterior
            .get(j)
            .map(|b| (1.0 - trace.wait) * b)
            .ok_or_else(|| Error::Protocol(format!("action {j} outside candidate range"))),
    }
}
