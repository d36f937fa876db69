use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::belief::BeliefNetConfig;
use crate::error::{Error, Result};
use crate::game::InstanceSpace;
use crate::kernel::Optimizer;
use crate::student::StudentConfig;
use crate::teacher::TeacherConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub space: InstanceSpace,
    pub candidates: usize,
    pub message_cost: f64,
    pub max_rounds: usize,

    pub phases: usize,
    pub iterations_per_phase: usize,
    /// Teacher iterations at the start of each phase; the rest train the student.
    pub teacher_iterations: usize,

    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub optimizer: OptimizerKind,
    pub momentum: f64,
    pub teacher_lr: f64,
    pub student_lr: f64,
    /// Teacher minibatch `N` drawn from the replay buffer.
    pub batch: usize,
    /// Episodes played per teacher iteration.
    pub teacher_episodes: usize,
    /// Episodes per student REINFORCE step.
    pub student_episodes: usize,
    pub buffer_capacity: usize,
    pub sync_interval: usize,
    pub student_baseline: f64,
    pub initial_wait: f64,

    pub hidden: usize,
    pub depth: usize,
    pub q_hidden: usize,

    pub pretrain: bool,
    pub pretrain_steps: usize,
    pub pretrain_batch: usize,
    pub pretrain_lr: f64,

    pub eval_interval: usize,
    pub log_interval: usize,
    pub seed: u64,

    pub train_games: usize,
    pub test_games: usize,
    /// Share of instances never used in training games.
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            space: InstanceSpace::number_set_4(),
            candidates: 4,
            message_cost: 0.1,
            max_rounds: 1,
            phases: 3,
            iterations_per_phase: 20_000,
            teacher_iterations: 10_000,
            beta: 5.0,
            gamma: 0.9,
            lambda: 1.0,
            optimizer: OptimizerKind::Adam,
            momentum: 0.9,
            teacher_lr: 0.001,
            student_lr: 0.0001,
            batch: 64,
            teacher_episodes: 1,
            student_episodes: 16,
            buffer_capacity: 50_000,
            sync_interval: 500,
            student_baseline: 0.0,
            initial_wait: 0.05,
            hidden: 64,
            depth: 2,
            q_hidden: 64,
            pretrain: true,
            pretrain_steps: 20_000,
            pretrain_batch: 32,
            pretrain_lr: 0.05,
            eval_interval: 1_000,
            log_interval: 100,
            seed: 0,
            train_games: 60_000,
            test_games: 10_000,
            holdout_fraction: 0.3,
        }
    }
}

fn optimizer(kind: OptimizerKind, lr: f64, momentum: f64) -> Optimizer {
    match kind {
        OptimizerKind::Sgd => Optimizer::Sgd { lr, momentum },
        OptimizerKind::Adam => Optimizer::adam(lr),
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        let positive = [
            ("candidates", self.candidates),
            ("max_rounds", self.max_rounds),
            ("iterations_per_phase", self.iterations_per_phase),
            ("batch", self.batch),
            ("teacher_episodes", self.teacher_episodes),
            ("student_episodes", self.student_episodes),
            ("buffer_capacity", self.buffer_capacity),
            ("sync_interval", self.sync_interval),
            ("hidden", self.hidden),
            ("depth", self.depth),
            ("q_hidden", self.q_hidden),
            ("eval_interval", self.eval_interval),
            ("log_interval", self.log_interval),
            ("pretrain_batch", self.pretrain_batch),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.teacher_iterations > self.iterations_per_phase {
            return Err(Error::Config(format!(
                "teacher_iterations {} exceeds iterations_per_phase {}",
                self.teacher_iterations, self.iterations_per_phase
            )));
        }
        if self.candidates < 2 {
            return Err(Error::Config("a game needs at least two candidates".into()));
        }
        if self.batch > self.buffer_capacity {
            return Err(Error::Config("batch larger than the replay buffer".into()));
        }
        for (name, v) in [
            ("teacher_lr", self.teacher_lr),
            ("student_lr", self.student_lr),
            ("pretrain_lr", self.pretrain_lr),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if !(self.message_cost.is_finite() && self.message_cost >= 0.0) {
            return Err(Error::Config("message_cost must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Config("holdout_fraction must lie in [0, 1)".into()));
        }
        self.teacher_config().validate()
    }

    pub fn belief_config(&self) -> BeliefNetConfig {
        BeliefNetConfig {
            vocab: self.space.vocab(),
            messages: self.space.num_messages(),
            hidden: self.hidden,
            depth: self.depth,
        }
    }

    pub fn teacher_config(&self) -> TeacherConfig {
        TeacherConfig {
            beta: self.beta,
            gamma: self.gamma,
            lambda: self.lambda,
            q_hidden: self.q_hidden,
        }
    }

    pub fn student_config(&self) -> StudentConfig {
        StudentConfig {
            candidates: self.candidates,
            baseline: self.student_baseline,
            initial_wait: self.initial_wait,
        }
    }

    pub fn teacher_optimizer(&self) -> Optimizer {
        optimizer(self.optimizer, self.teacher_lr, self.momentum)
    }

    pub fn student_optimizer(&self) -> Optimizer {
        optimizer(self.optimizer, self.student_lr, self.momentum)
    }

    pub fn pretrain_optimizer(&self) -> Optimizer {
        Optimizer::Sgd {
            lr: self.pretrain_lr,
            momentum: 0.9,
        }
    }

    pub fn total_iterations(&self) -> u64 {
        (self.phases * self.iterations_per_phase) as u64
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
