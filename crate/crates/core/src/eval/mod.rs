//! Evaluation: stratified accuracy, stability under attribute relabeling,
//! message validity and message/distractor covariance, plus reference
//! policies to compare against.

mod analysis;
mod baselines;
mod report;

pub use analysis::{
    check_exclusive, covariance_analysis, heldout_target_games, stability_eval, validity_eval, CovarianceMatrix,
    SigmaFamily, StabilityReport,
};
pub use baselines::{literal_expected_accuracy, ConstantTeacher, LiteralStudent, LiteralTeacher, RandomStudent};
pub use report::{evaluate, game_rng, level_bucket, EvalReport, GameResult, LevelStats, LEVEL_BUCKETS};
