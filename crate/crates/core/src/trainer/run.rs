use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::episode::{run_episode, Mode};
use crate::belief::{pretrain_bayesian, sample_pretrain_case, BeliefNet, PretrainReport};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::game::{Game, Instance};
use crate::student::StudentModel;
use crate::teacher::{ReplayBuffer, TeacherModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Teacher,
    Student,
    Eval,
}

/// One line of the metrics stream.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    /// Iterations completed when the record was written.
    pub iteration: u64,
    pub phase: usize,
    pub kind: Option<RecordKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obverter_loss: Option<f64>,
    /// `-J` of the student step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamped: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity: Option<f64>,
}

impl MetricRecord {
    pub fn from_eval(iteration: u64, phase: usize, r: &EvalReport) -> Self {
        MetricRecord {
            iteration,
            phase,
            kind: Some(RecordKind::Eval),
            accuracy: Some(r.accuracy),
            level0: r.level_accuracy(0),
            level1: r.level_accuracy(1),
            level2: r.level_accuracy(2),
            level_inf: r.level_accuracy(3),
            hard_accuracy: Some(r.hard_accuracy),
            mean_gain: Some(r.mean_gain),
            validity: Some(r.validity),
            ..Default::default()
        }
    }
}

/// Seed of the evaluation snapshots taken during training.
pub const SNAPSHOT_SEED: u64 = 0x5eed;

/// Alternating training of the teacher and the student.
///
/// Each phase trains the teacher for `teacher_iterations` iterations, with a
/// fresh replay buffer, and then the student for the rest of the phase. The
/// whole state advances one iteration per [`Trainer::step`], so a run can be
/// stopped, saved and resumed at any iteration.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub config: TrainConfig,
    pub teacher: TeacherModel,
    pub student: StudentModel,
    pub buffer: ReplayBuffer,
    pub rng: ChaCha8Rng,
    pub iteration: u64,
    pub teacher_updates: u64,
    pub metrics: Vec<MetricRecord>,
    pub pretrain_report: Option<PretrainReport>,
    train_games: Vec<Arc<Game>>,
    eval_games: Vec<Arc<Game>>,
}

/// Fits one belief network to the literal update over `pool`, holding out
/// 200 fresh cases for the report.
pub fn pretrain_shared<R: Rng + ?Sized>(
    config: &TrainConfig,
    pool: &[Instance],
    rng: &mut R,
) -> Result<(BeliefNet, PretrainReport)> {
    let mut net = BeliefNet::new(config.belief_config(), rng)?;
    let heldout = (0..200)
        .map(|_| sample_pretrain_case(pool, config.candidates, config.space.num_messages(), rng))
        .collect::<Result<Vec<_>>>()?;
    let report = pretrain_bayesian(
        &mut net,
        pool,
        config.candidates,
        config.pretrain_steps,
        config.pretrain_batch,
        &config.pretrain_optimizer(),
        &heldout,
        rng,
    )
    .map_err(|e| e.with_context("pretraining"))?;
    Ok((net, report))
}

/// Distinct instances appearing in `games`, sorted.
pub fn instances_of(games: &[Arc<Game>]) -> Vec<Instance> {
    let set: BTreeSet<&Instance> = games.iter().flat_map(|g| g.candidates.iter()).collect();
    set.into_iter().cloned().collect()
}

impl Trainer {
    /// Builds the agents and, if configured, pretrains one belief network on
    /// the training instances and copies it into both agents.
    pub fn new(config: TrainConfig, train_games: Vec<Arc<Game>>, eval_games: Vec<Arc<Game>>) -> Result<Self> {
        Self::build(config, None, train_games, eval_games)
    }

    /// Like [`Trainer::new`] but starts both agents from an already
    /// pretrained belief network instead of running pretraining.
    pub fn with_belief(
        config: TrainConfig,
        belief: &BeliefNet,
        train_games: Vec<Arc<Game>>,
        eval_games: Vec<Arc<Game>>,
    ) -> Result<Self> {
        Self::build(config, Some(belief), train_games, eval_games)
    }

    fn build(
        config: TrainConfig,
        pretrained: Option<&BeliefNet>,
        train_games: Vec<Arc<Game>>,
        eval_games: Vec<Arc<Game>>,
    ) -> Result<Self> {
        config.validate()?;
        if train_games.is_empty() {
            return Err(Error::Data("no training games".into()));
        }
        for g in train_games.iter().chain(&eval_games) {
            if g.num_candidates() != config.candidates || g.vocab() != config.space.vocab() {
                return Err(Error::Config(format!(
                    "game with {} candidates over vocabulary {} does not match the configuration",
                    g.num_candidates(),
                    g.vocab()
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let belief = config.belief_config();
        let mut teacher = TeacherModel::new(belief, config.teacher_config(), &mut rng)?;
        let mut student = StudentModel::new(belief, config.student_config(), &mut rng)?;
        let mut pretrain_report = None;
        if let Some(net) = pretrained {
            teacher.load_pretrained_belief(net)?;
            student.load_pretrained_belief(net)?;
        } else if config.pretrain && config.pretrain_steps > 0 {
            let pool = instances_of(&train_games);
            let (net, report) = pretrain_shared(&config, &pool, &mut rng)?;
            teacher.load_pretrained_belief(&net)?;
            student.load_pretrained_belief(&net)?;
            pretrain_report = Some(report);
        }
        Ok(Trainer {
            buffer: ReplayBuffer::new(config.buffer_capacity),
            config,
            teacher,
            student,
            rng,
            iteration: 0,
            teacher_updates: 0,
            metrics: Vec::new(),
            pretrain_report,
            train_games,
            eval_games,
        })
    }

    /// Reassembles a trainer from saved state.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        config: TrainConfig,
        teacher: TeacherModel,
        student: StudentModel,
        buffer: ReplayBuffer,
        rng: ChaCha8Rng,
        iteration: u64,
        teacher_updates: u64,
        metrics: Vec<MetricRecord>,
        train_games: Vec<Arc<Game>>,
        eval_games: Vec<Arc<Game>>,
    ) -> Result<Self> {
        config.validate()?;
        if iteration > config.total_iterations() {
            return Err(Error::Data(format!("iteration {iteration} beyond the schedule")));
        }
        Ok(Trainer {
            config,
            teacher,
            student,
            buffer,
            rng,
            iteration,
            teacher_updates,
            metrics,
            pretrain_report: None,
            train_games,
            eval_games,
        })
    }

    pub fn train_games(&self) -> &[Arc<Game>] {
        &self.train_games
    }

    pub fn eval_games(&self) -> &[Arc<Game>] {
        &self.eval_games
    }

    pub fn finished(&self) -> bool {
        self.iteration >= self.config.total_iterations()
    }

    /// `(phase, iteration within phase)` of the next step.
    pub fn cursor(&self) -> (usize, usize) {
        let per = self.config.iterations_per_phase as u64;
        ((self.iteration / per) as usize, (self.iteration % per) as usize)
    }

    pub fn evaluate(&self, games: &[Arc<Game>], seed: u64) -> Result<EvalReport> {
        evaluate(&self.teacher, &self.student, games, seed)
    }

    fn sample_game(&mut self) -> Arc<Game> {
        Arc::clone(self.train_games.choose(&mut self.rng).expect("training games are nonempty"))
    }

    fn teacher_iteration(&mut self) -> Result<Option<MetricRecord>> {
        for _ in 0..self.config.teacher_episodes {
            let game = self.sample_game();
            let out = run_episode(&self.teacher, &self.student, &game, Mode::Train, None, &mut self.rng)?;
            for t in out.transitions {
                self.buffer.push(t);
            }
        }
        if self.buffer.len() < self.config.batch {
            return Ok(None);
        }
        let losses = self
            .teacher
            .train_step(&self.buffer, self.config.batch, &self.config.teacher_optimizer(), &mut self.rng)?;
        self.teacher_updates += 1;
        if self.teacher_updates.is_multiple_of(self.config.sync_interval as u64) {
            self.teacher.sync_target()?;
        }
        Ok(Some(MetricRecord {
            kind: Some(RecordKind::Teacher),
            q_loss: Some(losses.q_loss),
            obverter_loss: Some(losses.obverter_loss),
            ..Default::default()
        }))
    }

    fn student_iteration(&mut self) -> Result<Option<MetricRecord>> {
        let mut episodes = Vec::with_capacity(self.config.student_episodes);
        for _ in 0..self.config.student_episodes {
            let game = self.sample_game();
            let out = run_episode(&self.teacher, &self.student, &game, Mode::Train, None, &mut self.rng)?;
            episodes.push(out.records);
        }
        let report = self
            .student
            .reinforce_step(&episodes, &self.config.student_optimizer(), self.config.gamma)?;
        Ok(Some(MetricRecord {
            kind: Some(RecordKind::Student),
            neg_objective: Some(-report.objective),
            clamped: Some(report.clamped),
            ..Default::default()
        }))
    }

    /// Runs one iteration of the schedule.
    pub fn step(&mut self) -> Result<()> {
        if self.finished() {
            return Err(Error::Training("schedule already complete".into()));
        }
        let (phase, within) = self.cursor();
        let teacher_turn = within < self.config.teacher_iterations;
        if within == 0 {
            self.buffer.clear();
        }
        let record = if teacher_turn {
            self.teacher_iteration()
        } else {
            self.student_iteration()
        }
        .map_err(|e| e.with_context(format!("phase {} iteration {}", phase + 1, within + 1)))?;
        self.iteration += 1;
        let done = self.iteration;
        if let Some(mut r) = record {
            if done.is_multiple_of(self.config.log_interval as u64) {
                r.iteration = done;
                r.phase = phase + 1;
                self.metrics.push(r);
            }
        }
        let phase_end = within + 1 == self.config.iterations_per_phase;
        if !self.eval_games.is_empty() && (done.is_multiple_of(self.config.eval_interval as u64) || phase_end) {
            let report = self
                .evaluate(&self.eval_games, SNAPSHOT_SEED)
                .map_err(|e| e.with_context(format!("evaluation at iteration {done}")))?;
            self.metrics.push(MetricRecord::from_eval(done, phase + 1, &report));
        }
        Ok(())
    }

    /// Steps until `iteration` iterations are complete (or the schedule ends).
    pub fn run_until(&mut self, iteration: u64) -> Result<()> {
        let stop = iteration.min(self.config.total_iterations());
        while self.iteration < stop {
            self.step()?;
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_until(self.config.total_iterations())
    }

    /// Evaluation records written at the end of each completed phase.
    pub fn phase_end_records(&self) -> Vec<&MetricRecord> {
        let per = self.config.iterations_per_phase as u64;
        self.metrics
            .iter()
            .filter(|r| r.kind == Some(RecordKind::Eval) && r.iteration % per == 0)
            .collect()
    }
}
