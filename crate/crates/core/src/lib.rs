//! Teacher/student referential games in which a pragmatic communication
//! protocol emerges from alternating reinforcement learning.
//!
//! The teacher holds a target among a handful of candidates and names one
//! attribute; the student updates a belief over the candidates and guesses.
//! Both agents carry a learned belief-update network. The teacher scores
//! messages with a Q-function evaluated on her prediction of the student's
//! next belief, the student is trained with REINFORCE, and the two are never
//! updated at the same time.
//!
//! Module map:
//!
//! - [`kernel`]: small differentiable building blocks with hand-written
//!   backward passes and a first-order optimizer.
//! - [`game`]: instance spaces, game sampling, the episode state machine and
//!   attribute relabelling.
//! - [`belief`]: exact literal Bayesian update, the learned belief network and
//!   its Bayesian pretraining.
//! - [`teacher`], [`student`]: the two agents.
//! - [`trainer`]: alternating-phase training loop.
//! - [`rtd`]: teaching sets, teaching hierarchy, recursive teaching dimension
//!   and candidate levels.
//! - [`eval`]: accuracy, stability, validity and covariance measurements.
//! - [`io`]: configuration, datasets, checkpoints, metrics and the CLI.

pub mod belief;
pub mod error;
pub mod eval;
pub mod game;
pub mod io;
pub mod kernel;
pub mod rtd;
pub mod student;
pub mod teacher;
pub mod trainer;

pub use error::{Error, Result};
