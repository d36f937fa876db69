use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::replay::{ReplayBuffer, Transition};
use crate::belief::{Belief, BeliefNet, BeliefNetConfig, EncoderTrace, HeadTrace};
use crate::error::{Error, Result};
use crate::game::{Game, Instance};
use crate::kernel::{
    argmax, cross_entropy, cross_entropy_grad, sample_categorical, softmax, Activation, Linear, Optimizer, ParamStore,
    Tensor2D,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeacherConfig {
    /// Inverse temperature of the message policy during training.
    pub beta: f64,
    pub gamma: f64,
    /// Weight of the obverter loss relative to the Q loss.
    pub lambda: f64,
    /// Width of the hidden layer of the Q readout.
    pub q_hidden: usize,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        TeacherConfig {
            beta: 5.0,
            gamma: 0.9,
            lambda: 1.0,
            q_hidden: 64,
        }
    }
}

impl TeacherConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be non-negative, got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(Error::Config(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.q_hidden == 0 {
            return Err(Error::Config("q_hidden must be positive".into()));
        }
        Ok(())
    }
}

/// Parameters `theta_A`: the teacher's belief network plus the Q readout.
#[derive(Clone, Debug)]
pub struct TeacherNet {
    pub belief: BeliefNet,
    pub q_params: ParamStore,
    q_hidden: Linear,
    q_out: Linear,
}

/// Forward values of one `Q(O, o*, b, m)` evaluation.
#[derive(Clone, Debug)]
pub struct QTrace {
    pub head: HeadTrace,
    pooled: Tensor2D,
    hidden: Tensor2D,
    pub q: f64,
}

const Q_ACTIVATION: Activation = Activation::Tanh;

impl TeacherNet {
    pub fn new<R: Rng + ?Sized>(belief: BeliefNetConfig, q_hidden: usize, rng: &mut R) -> Result<Self> {
        let belief_net = BeliefNet::with_prefix(belief, "teacher.belief", rng)?;
        let mut q_params = ParamStore::new();
        let d = belief.messages;
        let q_hidden_layer = Linear::new(&mut q_params, "teacher.q.hidden", 2 * d, q_hidden, rng);
        let q_out = Linear::new(&mut q_params, "teacher.q.out", q_hidden, 1, rng);
        Ok(TeacherNet {
            belief: belief_net,
            q_params,
            q_hidden: q_hidden_layer,
            q_out,
        })
    }

    /// Replaces the belief network, e.g. with a pretrained one. Parameter
    /// names are kept.
    pub fn set_belief_values(&mut self, pretrained: &BeliefNet) -> Result<()> {
        if pretrained.config() != self.belief.config() {
            return Err(Error::Config("pretrained belief net has a different shape".into()));
        }
        for (dst, src) in self.belief.params.iter_mut().zip(pretrained.params.iter()) {
            dst.value.copy_from_slice(&src.value);
        }
        Ok(())
    }

    pub fn stores(&self) -> [&ParamStore; 2] {
        [&self.belief.params, &self.q_params]
    }

    pub fn stores_mut(&mut self) -> [&mut ParamStore; 2] {
        [&mut self.belief.params, &mut self.q_params]
    }

    pub fn copy_values_from(&mut self, other: &TeacherNet) -> Result<()> {
        self.belief.params.copy_values_from(&other.belief.params)?;
        self.q_params.copy_values_from(&other.q_params)
    }

    pub fn encode<C: AsRef<Instance>>(&self, candidates: &[C]) -> Result<EncoderTrace> {
        self.belief.encode(candidates)
    }

    /// `Q` for one message given precomputed candidate embeddings. `target`
    /// and `prior` are in the same order as the embedding rows.
    pub fn q_from_embedding(&self, embedding: &Tensor2D, target: usize, prior: &Belief, message: usize) -> Result<QTrace> {
        let head = self.belief.head(embedding, prior, message)?;
        let d = embedding.cols();
        let mut pooled = Tensor2D::zeros(1, 2 * d);
        {
            let row = pooled.row_mut(0);
            for (k, &w) in head.posterior.iter().enumerate() {
                for (p, e) in row[..d].iter_mut().zip(embedding.row(k)) {
                    *p += w * e;
                }
            }
            row[d..].copy_from_slice(embedding.row(target));
        }
        let hidden = Q_ACTIVATION.apply(&self.q_hidden.forward(&self.q_params, &pooled)?);
        let q = self.q_out.forward(&self.q_params, &hidden)?.get(0, 0);
        Ok(QTrace {
            head,
            pooled,
            hidden,
            q,
        })
    }

    /// Q-values of every message.
    pub fn q_values<C: AsRef<Instance>>(&self, candidates: &[C], target: usize, prior: &Belief) -> Result<Vec<f64>> {
        let enc = self.encode(candidates)?;
        (0..self.belief.config().messages)
            .map(|m| Ok(self.q_from_embedding(enc.embedding(), target, prior, m)?.q))
            .collect()
    }

    /// Accumulates gradients of `dq * Q + <grad_posterior, f(O, b, m)>`.
    /// `grad_posterior` lets a loss on the predicted belief share the pass.
    pub fn backward(
        &mut self,
        enc: &EncoderTrace,
        trace: &QTrace,
        target: usize,
        prior: &Belief,
        dq: f64,
        grad_posterior: Option<&[f64]>,
    ) -> Result<()> {
        let embedding = enc.embedding();
        let (k, d) = embedding.shape();
        let d_hidden = self
            .q_out
            .backward(&mut self.q_params, &trace.hidden, &Tensor2D::from_vec(1, 1, vec![dq])?)?;
        let d_hidden_pre = Q_ACTIVATION.backward(&trace.hidden, &d_hidden);
        let d_pooled = self.q_hidden.backward(&mut self.q_params, &trace.pooled, &d_hidden_pre)?;
        let dp = &d_pooled.row(0)[..d];
        let dt = &d_pooled.row(0)[d..];

        let mut d_emb = Tensor2D::zeros(k, d);
        let mut d_post = match grad_posterior {
            Some(g) => g.to_vec(),
            None => vec![0.0; k],
        };
        for (i, w) in trace.head.posterior.iter().enumerate() {
            let e = embedding.row(i);
            d_post[i] += e.iter().zip(dp).map(|(a, b)| a * b).sum::<f64>();
            for (g, p) in d_emb.row_mut(i).iter_mut().zip(dp) {
                *g += w * p;
            }
        }
        for (g, t) in d_emb.row_mut(target).iter_mut().zip(dt) {
            *g += t;
        }
        let d_logits = BeliefNet::head_backward(&trace.head, prior, &d_post);
        BeliefNet::scatter_logit_grad(&mut d_emb, trace.head.message, &d_logits);
        self.belief.encode_backward(enc, &d_emb)
    }

    pub fn step(&mut self, optimizer: &Optimizer) -> Result<()> {
        self.belief.params.step(optimizer)?;
        self.q_params.step(optimizer)
    }

    pub fn zero_grads(&mut self) {
        self.belief.params.zero_grads();
        self.q_params.zero_grads();
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrainLosses {
    pub q_loss: f64,
    pub obverter_loss: f64,
}

/// The teacher agent: online parameters, a frozen target copy and the
/// hyper-parameters of its policy and update.
#[derive(Clone, Debug)]
pub struct TeacherModel {
    pub online: TeacherNet,
    pub target: TeacherNet,
    pub config: TeacherConfig,
}

impl TeacherModel {
    pub fn new<R: Rng + ?Sized>(belief: BeliefNetConfig, config: TeacherConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let online = TeacherNet::new(belief, config.q_hidden, rng)?;
        let target = online.clone();
        Ok(TeacherModel {
            online,
            target,
            config,
        })
    }

    /// Loads pretrained belief weights into both the online and target nets.
    pub fn load_pretrained_belief(&mut self, pretrained: &BeliefNet) -> Result<()> {
        self.online.set_belief_values(pretrained)?;
        self.target.set_belief_values(pretrained)
    }

    fn view(game: &Game) -> (Vec<&Instance>, usize) {
        (game.view(&game.teacher_perm), game.target_in_view(&game.teacher_perm))
    }

    /// `Q(O, o*, b, m)` under the online parameters; `belief` in canonical order.
    pub fn q_value(&self, game: &Game, belief: &Belief, message: usize) -> Result<f64> {
        let (cands, target) = Self::view(game);
        let enc = self.online.encode(&cands)?;
        Ok(self
            .online
            .q_from_embedding(enc.embedding(), target, &belief.to_view(&game.teacher_perm), message)?
            .q)
    }

    pub fn q_values(&self, game: &Game, belief: &Belief) -> Result<Vec<f64>> {
        Self::q_values_with(&self.online, game, belief)
    }

    fn q_values_with(net: &TeacherNet, game: &Game, belief: &Belief) -> Result<Vec<f64>> {
        let (cands, target) = Self::view(game);
        net.q_values(&cands, target, &belief.to_view(&game.teacher_perm))
    }

    /// Message distribution `softmax(beta * Q)`.
    pub fn policy(&self, game: &Game, belief: &Belief) -> Result<Vec<f64>> {
        softmax(&self.q_values(game, belief)?, self.config.beta)
    }

    /// Samples from the softmax policy, or takes the first maximizer when `greedy`.
    pub fn select_message(&self, game: &Game, belief: &Belief, greedy: bool, rng: &mut dyn RngCore) -> Result<usize> {
        let q = self.q_values(game, belief)?;
        if greedy {
            return Ok(argmax(&q));
        }
        let p = softmax(&q, self.config.beta)?;
        Ok(sample_categorical(&p, rng))
    }

    /// The teacher's prediction of the student's belief after `message`.
    pub fn predict_belief(&self, game: &Game, prior: &Belief, message: usize) -> Result<Belief> {
        let cands = game.view(&game.teacher_perm);
        let b = self
            .online
            .belief
            .update(&cands, &prior.to_view(&game.teacher_perm), message)?;
        Ok(Belief::from_view(&b, &game.teacher_perm))
    }

    /// `r` for terminal transitions, else `r + gamma * max_m Q_target(O, o*, b', m)`.
    pub fn td_target(&self, t: &Transition) -> Result<f64> {
        if t.terminal || self.config.gamma == 0.0 {
            return Ok(t.reward);
        }
        let q = Self::q_values_with(&self.target, &t.game, &t.next_belief)?;
        Ok(t.reward + self.config.gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Loss `(xi - Q)^2 + lambda * H(b_student, f_A(O, b, m))` of one transition
    /// under the online parameters, with `xi` supplied.
    pub fn transition_loss(&self, t: &Transition, xi: f64) -> Result<TrainLosses> {
        let (cands, target) = Self::view(&t.game);
        let perm = &t.game.teacher_perm;
        let enc = self.online.encode(&cands)?;
        let tr = self
            .online
            .q_from_embedding(enc.embedding(), target, &t.prior.to_view(perm), t.message)?;
        Ok(TrainLosses {
            q_loss: (xi - tr.q) * (xi - tr.q),
            obverter_loss: cross_entropy(t.next_belief.to_view(perm).probs(), &tr.head.posterior)?,
        })
    }

    /// Gradients of the mean losses over `batch` with precomputed targets.
    /// Returns the (unweighted) mean losses.
    pub fn accumulate_batch(&mut self, batch: &[&Transition], targets: &[f64]) -> Result<TrainLosses> {
        let n = batch.len() as f64;
        let lambda = self.config.lambda;
        let mut losses = TrainLosses::default();
        for (t, &xi) in batch.iter().zip(targets) {
            let (cands, target) = Self::view(&t.game);
            let perm = &t.game.teacher_perm;
            let prior = t.prior.to_view(perm);
            let observed = t.next_belief.to_view(perm);
            let enc = self.online.encode(&cands)?;
            let tr = self.online.q_from_embedding(enc.embedding(), target, &prior, t.message)?;
            losses.q_loss += (xi - tr.q) * (xi - tr.q) / n;
            losses.obverter_loss += cross_entropy(observed.probs(), &tr.head.posterior)? / n;
            let dq = -2.0 * (xi - tr.q) / n;
            let d_post: Vec<f64> = cross_entropy_grad(observed.probs(), &tr.head.posterior)
                .into_iter()
                .map(|g| lambda * g / n)
                .collect();
            self.online.backward(&enc, &tr, target, &prior, dq, Some(&d_post))?;
        }
        if !(losses.q_loss.is_finite() && losses.obverter_loss.is_finite()) {
            return Err(Error::Numeric("teacher loss".into()));
        }
        Ok(losses)
    }

    /// One optimizer step on `L^Q + lambda * L^Obv` over `n` sampled transitions.
    /// The target parameters are not touched.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        n: usize,
        optimizer: &Optimizer,
        rng: &mut R,
    ) -> Result<TrainLosses> {
        if n == 0 || buffer.len() < n {
            return Err(Error::Training(format!(
                "replay buffer holds {} transitions, batch needs {n}",
                buffer.len()
            )));
        }
        let batch = buffer.sample(n, rng);
        let targets = batch.iter().map(|t| self.td_target(t)).collect::<Result<Vec<_>>>()?;
        let losses = self.accumulate_batch(&batch, &targets)?;
        self.online.step(optimizer)?;
        Ok(losses)
    }

    /// `theta'_A <- theta_A`.
    pub fn sync_target(&mut self) -> Result<()> {
        self.target.copy_values_from(&self.online)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{sample_game, InstanceSpace};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn small_cfg() -> BeliefNetConfig {
        BeliefNetConfig {
            vocab: 10,
            messages: 10,
            hidden: 5,
            depth: 2,
        }
    }

    fn small_model(seed: u64, config: TeacherConfig) -> TeacherModel {
        TeacherModel::new(
            small_cfg(),
            TeacherConfig { q_hidden: 6, ..config },
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap()
    }

    fn random_belief(k: usize, rng: &mut ChaCha8Rng) -> Belief {
        Belief::from_weights((0..k).map(|_| rng.gen_range(0.05..1.0)).collect()).unwrap()
    }

    fn transition(rng: &mut ChaCha8Rng, terminal: bool) -> Transition {
        let game = sample_game(&InstanceSpace::number_set_4(), 4, rng).unwrap();
        Transition {
            game: Arc::new(game),
            prior: random_belief(4, rng),
            message: rng.gen_range(0..10),
            next_belief: random_belief(4, rng),
            reward: if rng.gen_bool(0.5) { 0.9 } else { -0.1 },
            terminal,
        }
    }

    #[test]
    fn q_is_deterministic_and_permutation_equivariant() {
        let model = small_model(1, TeacherConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let g = sample_game(&InstanceSpace::number_set_4(), 4, &mut rng).unwrap();
            let b = random_belief(4, &mut rng);
            let q1 = model.q_values(&g, &b).unwrap();
            assert_eq!(q1, model.q_values(&g, &b).unwrap());
            let mut h = g.clone();
            h.teacher_perm.reverse();
            let q2 = model.q_values(&h, &b).unwrap();
            for (a, c) in q1.iter().zip(&q2) {
                assert!((a - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn q_gradient_matches_central_differences() {
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..20 {
            let mut model = small_model(10 + seed, TeacherConfig::default());
            let g = sample_game(&InstanceSpace::number_set_4(), 4, &mut rng).unwrap();
            let b = random_belief(4, &mut rng);
            let m = rng.gen_range(0..10);
            let cands = g.view(&g.teacher_perm);
            let target = g.target_in_view(&g.teacher_perm);
            let bv = b.to_view(&g.teacher_perm);
            let enc = model.online.encode(&cands).unwrap();
            let tr = model.online.q_from_embedding(enc.embedding(), target, &bv, m).unwrap();
            model.online.backward(&enc, &tr, target, &bv, 1.0, None).unwrap();
            for store_idx in 0..2 {
                let analytic = model.online.stores()[store_idx].flat_grads();
                for i in 0..analytic.len() {
                    let orig = *model.online.stores_mut()[store_idx].flat_value_mut(i);
                    *model.online.stores_mut()[store_idx].flat_value_mut(i) = orig + h;
                    let up = model.q_value(&g, &b, m).unwrap();
                    *model.online.stores_mut()[store_idx].flat_value_mut(i) = orig - h;
                    let down = model.q_value(&g, &b, m).unwrap();
                    *model.online.stores_mut()[store_idx].flat_value_mut(i) = orig;
                    let numeric = (up - down) / (2.0 * h);
                    let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-7);
                    assert!(err < 1e-4, "seed {seed} store {store_idx} param {i}");
                }
            }
        }
    }

    #[test]
    fn beta_zero_gives_uniform_messages() {
        let model = small_model(4, TeacherConfig { beta: 0.0, ..Default::default() });
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = sample_game(&InstanceSpace::number_set_4(), 4, &mut rng).unwrap();
        let b = Belief::uniform(4);
        let n = 10_000;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            counts[model.select_message(&g, &b, false, &mut rng).unwrap()] += 1;
        }
        let sd = (n as f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 10.0).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn large_beta_picks_argmax() {
        let mut model = small_model(6, TeacherConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = sample_game(&InstanceSpace::number_set_4(), 4, &mut rng).unwrap();
        let b = Belief::uniform(4);
        let q = model.q_values(&g, &b).unwrap();
        let best = argmax(&q);
        let mut sorted = q.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // Scale beta so every other message has probability below e^-20.
        model.config.beta = 20.0 / (sorted[0] - sorted[1]);
        let hits = (0..10_000)
            .filter(|_| model.select_message(&g, &b, false, &mut rng).unwrap() == best)
            .count();
        assert!(hits as f64 / 10_000.0 > 0.999);
        assert_eq!(model.select_message(&g, &b, true, &mut rng).unwrap(), best);
    }

    #[test]
    fn sampled_messages_follow_softmax() {
        // Chi-square goodness of fit against the exact softmax probabilities.
        let model = small_model(8, TeacherConfig { beta: 20.0, ..Default::default() });
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = sample_game(&InstanceSpace::number_set_4(), 4, &mut rng).unwrap();
        let b = Belief::uniform(4);
        let p = model.policy(&g, &b).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            counts[model.select_message(&g, &b, false, &mut rng).unwrap()] += 1;
        }
        // Pool cells with small expectation into one.
        let (mut chi2, mut dof, mut rest_obs, mut rest_exp) = (0.0, 0usize, 0.0, 0.0);
        for (c, pi) in counts.iter().zip(&p) {
            let e = pi * n as f64;
            if e < 5.0 {
                rest_obs += *c as f64;
                rest_exp += e;
            } else {
                chi2 += (*c as f64 - e).powi(2) / e;
                dof += 1;
            }
        }
        if rest_exp >= 5.0 {
            chi2 += (rest_obs - rest_exp).powi(2) / rest_exp;
            dof += 1;
        }
        let dof = dof.saturating_sub(1).max(1);
        // Upper 1% critical values of chi-square for 1..=9 degrees of freedom.
        let crit = [6.63, 9.21, 11.34, 13.28, 15.09, 16.81, 18.48, 20.09, 21.67][dof - 1];
        assert!(chi2 < crit, "chi2 {chi2} dof {dof}");
    }

    #[test]
    fn td_target_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = small_model(12, TeacherConfig::default());
        let mut t = transition(&mut rng, true);
        t.reward = 0.9;
        assert_eq!(model.td_target(&t).unwrap(), 0.9);

        let zero_gamma = small_model(12, TeacherConfig { gamma: 0.0, ..Default::default() });
        let t = transition(&mut rng, false);
        assert_eq!(zero_gamma.td_target(&t).unwrap(), t.reward);

        let small = TeacherModel::new(
            BeliefNetConfig { vocab: 10, messages: 2, hidden: 4, depth: 1 },
            TeacherConfig { q_hidden: 3, ..Default::default() },
            &mut rng,
        )
        .unwrap();
        let mut t = transition(&mut rng, false);
        t.message = 1;
        let (cands, target) = TeacherModel::view(&t.game);
        let bv = t.next_belief.to_view(&t.game.teacher_perm);
        let enc = small.target.encode(&cands).unwrap();
        let q0 = small.target.q_from_embedding(enc.embedding(), target, &bv, 0).unwrap().q;
        let q1 = small.target.q_from_embedding(enc.embedding(), target, &bv, 1).unwrap().q;
        let expected = t.reward + 0.9 * q0.max(q1);
        assert!((small.td_target(&t).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn target_net_frozen_between_syncs() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut model = small_model(14, TeacherConfig::default());
        let mut buffer = ReplayBuffer::new(100);
        for _ in 0..32 {
            buffer.push(transition(&mut rng, false));
        }
        let probe = transition(&mut rng, false);
        let before = model.td_target(&probe).unwrap();
        let online_before = model.q_value(&probe.game, &probe.prior, probe.message).unwrap();
        for _ in 0..5 {
            model.train_step(&buffer, 8, &Optimizer::sgd(0.05), &mut rng).unwrap();
        }
        assert_eq!(model.td_target(&probe).unwrap(), before);
        assert_ne!(model.q_value(&probe.game, &probe.prior, probe.message).unwrap(), online_before);
        model.sync_target().unwrap();
        let mut q_online = model.q_values(&probe.game, &probe.next_belief).unwrap();
        q_online.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let expected = probe.reward + 0.9 * q_online[0];
        assert!((model.td_target(&probe).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_batch_equals_single_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let model = small_model(16, TeacherConfig::default());
        let t = transition(&mut rng, true);
        let single = model.transition_loss(&t, t.reward).unwrap();
        let mut m = model.clone();
        let batch = vec![&t; 5];
        let losses = m.accumulate_batch(&batch, &[t.reward; 5]).unwrap();
        assert!((losses.q_loss - single.q_loss).abs() < 1e-12);
        assert!((losses.obverter_loss - single.obverter_loss).abs() < 1e-12);
    }

    #[test]
    fn one_small_step_decreases_transition_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for seed in 0..10 {
            let mut model = small_model(20 + seed, TeacherConfig::default());
            let t = transition(&mut rng, true);
            let total = |l: TrainLosses| l.q_loss + model_lambda() * l.obverter_loss;
            fn model_lambda() -> f64 {
                TeacherConfig::default().lambda
            }
            let before = total(model.transition_loss(&t, t.reward).unwrap());
            let mut buffer = ReplayBuffer::new(1);
            buffer.push(t.clone());
            model.train_step(&buffer, 1, &Optimizer::sgd(1e-3), &mut rng).unwrap();
            let after = total(model.transition_loss(&t, t.reward).unwrap());
            assert!(after < before, "{before} -> {after}");
        }
    }

    #[test]
    fn lambda_zero_still_reports_obverter_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut model = small_model(21, TeacherConfig { lambda: 0.0, ..Default::default() });
        let mut with_lambda = small_model(21, TeacherConfig::default());
        let t = transition(&mut rng, true);
        let mut buffer = ReplayBuffer::new(1);
        buffer.push(t.clone());
        let a = model.train_step(&buffer, 1, &Optimizer::sgd(1e-2), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let b = with_lambda
            .train_step(&buffer, 1, &Optimizer::sgd(1e-2), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert!(a.obverter_loss > 0.0);
        assert_eq!(a.obverter_loss, b.obverter_loss);
        assert_ne!(model.online.belief.params.flat_values(), with_lambda.online.belief.params.flat_values());
    }

    #[test]
    fn underflow_is_training_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut model = small_model(24, TeacherConfig::default());
        let buffer = ReplayBuffer::new(10);
        assert!(matches!(
            model.train_step(&buffer, 4, &Optimizer::sgd(0.1), &mut rng),
            Err(Error::Training(_))
        ));
    }
}
