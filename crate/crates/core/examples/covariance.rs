//! Trains a pair on a short schedule and measures, for targets never seen in
//! training, how the teacher's first message co-varies with the attributes of
//! random distractors. Negative diagonal entries mean an attribute is named
//! less often when distractors also carry it.
//!
//! cargo run --release --example covariance -- [key=value ...]

use std::sync::Arc;

use pragmatic_protocol::eval::covariance_analysis;
use pragmatic_protocol::io::apply_overrides;
use pragmatic_protocol::trainer::{generate_datasets, TrainConfig, Trainer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pragmatic_protocol::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let short = TrainConfig {
        phases: 2,
        iterations_per_phase: 6000,
        teacher_iterations: 3000,
        eval_interval: 6000,
        test_games: 1000,
        ..Default::default()
    };
    let config = apply_overrides(&short, args.iter().map(String::as_str))?;
    let data = generate_datasets(&config, &mut ChaCha8Rng::seed_from_u64(config.seed))?;
    let space = config.space.clone();
    let k = config.candidates;
    let mut trainer = Trainer::new(
        config,
        data.train.into_iter().map(Arc::new).collect(),
        data.test.into_iter().map(Arc::new).collect(),
    )?;
    trainer.run()?;

    let targets: Vec<_> = data.heldout_instances.iter().take(20).cloned().collect();
    let pool = space.enumerate()?;
    let cov = covariance_analysis(&trainer.teacher, &targets, &pool, k, 100, 5)?;
    print!("      ");
    for a in 0..cov.vocab {
        print!("{:>7}", space.attr_name(a));
    }
    println!();
    for (m, row) in cov.rows().enumerate() {
        print!("{:>6}", space.attr_name(m));
        for v in row {
            print!("{v:>7.3}");
        }
        println!();
    }
    println!("mean diagonal {:.4} over {} targets", cov.mean_diagonal(), cov.targets);
    Ok(())
}
