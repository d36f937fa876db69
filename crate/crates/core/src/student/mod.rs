//! The student: a learned belief update followed by a wait gate, trained with
//! REINFORCE.

mod model;

pub use model::{returns, EpisodeStepRecord, ReinforceReport, StudentConfig, StudentModel, StudentTrace};
