//! The alternating training schedule and the machinery to play episodes.

mod config;
mod data;
mod episode;
mod run;

pub use config::{OptimizerKind, TrainConfig};
pub use data::{generate_datasets, split_instances, Datasets};
pub use episode::{run_episode, EpisodeOutcome, Mode, ProtocolPair, StudentPolicy, TeacherPolicy};
pub use run::{instances_of, pretrain_shared, MetricRecord, RecordKind, Trainer, SNAPSHOT_SEED};
