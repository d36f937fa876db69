//! Files and the command line: configuration, datasets, checkpoints and
//! metrics.

mod checkpoint;
mod cli;
mod config;
mod dataset;
mod metrics;

pub use checkpoint::{
    decode_belief_net, decode_checkpoint, encode_belief_net, encode_checkpoint, is_trainer_checkpoint, load_checkpoint,
    save_checkpoint, CHECKPOINT_VERSION,
};
pub use cli::{run_cli, Cli, Command, HELDOUT_INSTANCES_FILE, TEST_FILE, TRAIN_FILE, TRAIN_INSTANCES_FILE};
pub use config::{apply_overrides, load_config, parse_config, parse_space};
pub use dataset::{read_dataset, read_instances, write_dataset, write_instances};
pub use metrics::{read_metrics, write_covariance_csv, write_eval_csv, MetricsWriter};
