use std::sync::Arc;

use rand::RngCore;

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::game::{Action, AttributeMap, EpisodeState, Game, Instance};
use crate::kernel::{argmax, sample_categorical, softmax};
use crate::student::{EpisodeStepRecord, StudentModel};
use crate::teacher::{TeacherModel, Transition};

/// A message policy. Every argument is in the teacher's presentation order.
pub trait TeacherPolicy {
    fn choose_message(
        &self,
        candidates: &[&Instance],
        target: usize,
        estimate: &Belief,
        greedy: bool,
        rng: &mut dyn RngCore,
    ) -> Result<usize>;

    /// The teacher's model of the student's belief after `message`.
    fn predict_belief(&self, candidates: &[&Instance], prior: &Belief, message: usize) -> Result<Belief>;
}

/// An action policy. It sees only its own presentation of the candidates,
/// never the target.
pub trait StudentPolicy {
    /// Returns the action and the updated belief, both in the student's order.
    fn respond(
        &self,
        candidates: &[&Instance],
        prior: &Belief,
        message: usize,
        greedy: bool,
        rng: &mut dyn RngCore,
    ) -> Result<(Action, Belief)>;
}

impl TeacherPolicy for TeacherModel {
    fn choose_message(
        &self,
        candidates: &[&Instance],
        target: usize,
        estimate: &Belief,
        greedy: bool,
        rng: &mut dyn RngCore,
    ) -> Result<usize> {
        let q = self.online.q_values(candidates, target, estimate)?;
        if greedy {
            return Ok(argmax(&q));
        }
        Ok(sample_categorical(&softmax(&q, self.config.beta)?, rng))
    }

    fn predict_belief(&self, candidates: &[&Instance], prior: &Belief, message: usize) -> Result<Belief> {
        self.online.belief.update(candidates, prior, message)
    }
}

impl StudentPolicy for StudentModel {
    fn respond(
        &self,
        candidates: &[&Instance],
        prior: &Belief,
        message: usize,
        greedy: bool,
        rng: &mut dyn RngCore,
    ) -> Result<(Action, Belief)> {
        let (_, trace) = self.forward(candidates, prior, message)?;
        let dist = trace.distribution();
        let idx = if greedy { argmax(&dist) } else { sample_categorical(&dist, rng) };
        let action = if idx == candidates.len() { Action::Wait } else { Action::Pick(idx) };
        Ok((action, trace.belief()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Stochastic policies; the student reports its belief back to the teacher.
    Train,
    /// Greedy policies; the teacher tracks the student with its own model.
    Eval,
}

/// A teacher and a student together with the feedback mode.
pub struct ProtocolPair<'a> {
    pub teacher: &'a dyn TeacherPolicy,
    pub student: &'a dyn StudentPolicy,
    pub mode: Mode,
}

#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub state: EpisodeState,
    /// Teacher-side records, filled in train mode only.
    pub transitions: Vec<Transition>,
    /// Student-side records, filled in train mode only.
    pub records: Vec<EpisodeStepRecord>,
}

impl ProtocolPair<'_> {
    pub fn run(&self, game: &Arc<Game>, rng: &mut dyn RngCore) -> Result<EpisodeOutcome> {
        run_episode(self.teacher, self.student, game, self.mode, None, rng)
    }

    pub fn run_mapped(&self, game: &Arc<Game>, map: &AttributeMap, rng: &mut dyn RngCore) -> Result<EpisodeOutcome> {
        run_episode(self.teacher, self.student, game, self.mode, Some(map), rng)
    }
}

/// Plays one episode from uniform beliefs.
///
/// With `map`, the student is shown the relabeled candidates and receives the
/// relabeled message, while the teacher plays the original game.
pub fn run_episode(
    teacher: &dyn TeacherPolicy,
    student: &dyn StudentPolicy,
    game: &Arc<Game>,
    mode: Mode,
    map: Option<&AttributeMap>,
    rng: &mut dyn RngCore,
) -> Result<EpisodeOutcome> {
    game.validate()?;
    if let Some(m) = map {
        if m.vocab() != game.vocab() {
            return Err(Error::Config(format!(
                "attribute map over {} symbols for vocabulary {}",
                m.vocab(),
                game.vocab()
            )));
        }
    }
    let greedy = mode == Mode::Eval;
    let t_perm = &game.teacher_perm;
    let s_perm = &game.student_perm;
    let t_cands = game.view(t_perm);
    let t_target = game.target_in_view(t_perm);
    let mapped: Option<Vec<Instance>> =
        map.map(|m| s_perm.iter().map(|&i| m.map_instance(&game.candidates[i])).collect());
    let s_cands: Vec<&Instance> = match &mapped {
        Some(v) => v.iter().collect(),
        None => game.view(s_perm),
    };

    let mut state = EpisodeState::new(game);
    let mut transitions = Vec::new();
    let mut records = Vec::new();
    while !state.terminal {
        let estimate = state.teacher_estimate.clone();
        let message = teacher.choose_message(&t_cands, t_target, &estimate.to_view(t_perm), greedy, rng)?;
        let heard = map.map_or(message, |m| m.map(message));
        let prior = state.student_belief.clone();
        let (action, belief_view) = student.respond(&s_cands, &prior.to_view(s_perm), heard, greedy, rng)?;
        state.student_belief = Belief::from_view(&belief_view, s_perm);
        let reward = state.step(game, message, action)?;
        state.teacher_estimate = match mode {
            Mode::Train => state.student_belief.clone(),
            Mode::Eval => {
                let predicted = teacher.predict_belief(&t_cands, &estimate.to_view(t_perm), message)?;
                Belief::from_view(&predicted, t_perm)
            }
        };
        if mode == Mode::Train {
            transitions.push(Transition {
                game: Arc::clone(game),
                prior: estimate,
                message,
                next_belief: state.student_belief.clone(),
                reward,
                terminal: state.terminal,
            });
            records.push(EpisodeStepRecord {
                game: Arc::clone(game),
                prior,
                message: heard,
                action,
                reward,
            });
        }
    }
    Ok(EpisodeOutcome {
        state,
        transitions,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{BeliefNetConfig, literal_update};
    use crate::game::{sample_game, InstanceSpace};
    use crate::student::StudentConfig;
    use crate::teacher::TeacherConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::cell::RefCell;

    fn models(seed: u64) -> (TeacherModel, StudentModel) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = BeliefNetConfig { vocab: 10, messages: 10, hidden: 8, depth: 2 };
        (
            TeacherModel::new(cfg, TeacherConfig::default(), &mut rng).unwrap(),
            StudentModel::new(cfg, StudentConfig::new(4), &mut rng).unwrap(),
        )
    }

    /// Wraps a student and records every belief it reports.
    struct Spy<'a> {
        inner: &'a StudentModel,
        seen: RefCell<Vec<Belief>>,
    }

    impl StudentPolicy for Spy<'_> {
        fn respond(&self, c: &[&Instance], p: &Belief, m: usize, g: bool, rng: &mut dyn RngCore) -> Result<(Action, Belief)> {
            let out = self.inner.respond(c, p, m, g, rng)?;
            self.seen.borrow_mut().push(out.1.clone());
            Ok(out)
        }
    }

    /// A teacher that records the estimates it is given.
    struct Echo {
        estimates: RefCell<Vec<Belief>>,
    }

    impl TeacherPolicy for Echo {
        fn choose_message(&self, c: &[&Instance], t: usize, e: &Belief, _: bool, _: &mut dyn RngCore) -> Result<usize> {
            self.estimates.borrow_mut().push(e.clone());
            Ok(c[t].attrs()[0])
        }
        fn predict_belief(&self, c: &[&Instance], p: &Belief, m: usize) -> Result<Belief> {
            literal_update(c, p, m)
        }
    }

    #[test]
    fn train_mode_single_round_gives_one_record_each() {
        let (t, s) = models(1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let g = Arc::new(sample_game(&InstanceSpace::number_set_4(), 4, &mut rng).unwrap());
            let out = run_episode(&t, &s, &g, Mode::Train, None, &mut rng).unwrap();
            assert!(out.state.terminal);
            assert_eq!(out.transitions.len(), 1);
            assert_eq!(out.records.len(), 1);
            assert_eq!(out.transitions[0].prior, Belief::uniform(4));
            assert_eq!(out.transitions[0].next_belief, out.state.student_belief);
            assert!(out.transitions[0].terminal);
        }
    }

    #[test]
    fn train_mode_feeds_student_belief_back() {
        let (_, s) = models(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = sample_game(&InstanceSpace::number_set_4(), 4, &mut rng).unwrap();
        g.max_rounds = 3;
        let g = Arc::new(g);
        // A student that always waits, so the episode runs all rounds.
        struct Waiter<'a>(Spy<'a>);
        impl StudentPolicy for Waiter<'_> {
            fn respond(&self, c: &[&Instance], p: &Belief, m: usize, gr: bool, r: &mut dyn RngCore) -> Result<(Action, Belief)> {
                let (_, b) = self.0.respond(c, p, m, gr, r)?;
                Ok((Action::Wait, b))
            }
        }
        let spy = Waiter(Spy { inner: &s, seen: RefCell::new(vec![]) });
        let echo = Echo { estimates: RefCell::new(vec![]) };
        let out = run_episode(&echo, &spy, &g, Mode::Train, None, &mut rng).unwrap();
        assert_eq!(out.transitions.len(), 3);
        let est = echo.estimates.borrow();
        let seen = spy.0.seen.borrow();
        assert_eq!(est[0], Belief::uniform(4));
        for r in 1..3 {
            // the estimate at round r is bit-identical to the student's belief after round r-1
            let student_canonical = Belief::from_view(&seen[r - 1], &g.student_perm);
            assert_eq!(est[r], student_canonical.to_view(&g.teacher_perm));
        }
    }

    #[test]
    fn eval_mode_never_reads_the_student_belief() {
        let (t, s) = models(5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // A student that reports garbage beliefs but acts like `s`.
        struct Liar<'a>(&'a StudentModel);
        impl StudentPolicy for Liar<'_> {
            fn respond(&self, c: &[&Instance], p: &Belief, m: usize, g: bool, r: &mut dyn RngCore) -> Result<(Action, Belief)> {
                let (a, _) = self.0.respond(c, p, m, g, r)?;
                Ok((a, Belief::one_hot(c.len(), c.len() - 1)))
            }
        }
        for _ in 0..30 {
            let mut g = sample_game(&InstanceSpace::number_set_4(), 4, &mut rng).unwrap();
            g.max_rounds = 2;
            let g = Arc::new(g);
            let a = run_episode(&t, &s, &g, Mode::Eval, None, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            let b = run_episode(&t, &Liar(&s), &g, Mode::Eval, None, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            assert_eq!(a.state.messages, b.state.messages);
            assert_eq!(a.state.teacher_estimate, b.state.teacher_estimate);
            assert!(a.transitions.is_empty() && a.records.is_empty());
        }
    }

    #[test]
    fn mapped_student_hears_mapped_message() {
        let (_, s) = models(7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = Arc::new(sample_game(&InstanceSpace::number_set_4(), 4, &mut rng).unwrap());
        let echo = Echo { estimates: RefCell::new(vec![]) };
        let sigma = AttributeMap::shift(10, 1);
        struct Ears(RefCell<Vec<(Vec<Instance>, usize)>>);
        impl StudentPolicy for Ears {
            fn respond(&self, c: &[&Instance], p: &Belief, m: usize, _: bool, _: &mut dyn RngCore) -> Result<(Action, Belief)> {
                self.0.borrow_mut().push((c.iter().map(|x| (*x).clone()).collect(), m));
                Ok((Action::Pick(0), p.clone()))
            }
        }
        let ears = Ears(RefCell::new(vec![]));
        let out = run_episode(&echo, &ears, &g, Mode::Eval, Some(&sigma), &mut rng).unwrap();
        let heard = ears.0.borrow();
        assert_eq!(heard[0].1, sigma.map(out.state.messages[0]));
        for (j, inst) in heard[0].0.iter().enumerate() {
            assert_eq!(*inst, sigma.map_instance(&g.candidates[g.student_perm[j]]));
        }
        let _ = s;
    }

    #[test]
    fn vocabulary_mismatch_is_config_error() {
        let (t, s) = models(9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = Arc::new(sample_game(&InstanceSpace::number_set_7(), 4, &mut rng).unwrap());
        let err = run_episode(&t, &s, &g, Mode::Eval, None, &mut rng).unwrap_err();
        assert!(matches!(err.root(), Error::Config(_)), "{err}");
    }
}
