//! Stops a short run in the middle of a phase, writes a checkpoint, reloads
//! it and finishes; the result matches a run that was never interrupted.

use std::sync::Arc;

use pragmatic_protocol::io::{load_checkpoint, save_checkpoint};
use pragmatic_protocol::trainer::{generate_datasets, TrainConfig, Trainer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pragmatic_protocol::Result<()> {
    let config = TrainConfig {
        phases: 2,
        iterations_per_phase: 400,
        teacher_iterations: 200,
        pretrain_steps: 500,
        eval_interval: 200,
        train_games: 2000,
        test_games: 500,
        ..Default::default()
    };
    let data = generate_datasets(&config, &mut ChaCha8Rng::seed_from_u64(config.seed))?;
    let train: Vec<_> = data.train.into_iter().map(Arc::new).collect();
    let test: Vec<_> = data.test.into_iter().map(Arc::new).collect();

    let mut whole = Trainer::new(config.clone(), train.clone(), test.clone())?;
    whole.run()?;

    let mut first = Trainer::new(config.clone(), train.clone(), test.clone())?;
    first.run_until(300)?;
    let dir = std::env::temp_dir().join("pragma-checkpoint-example");
    std::fs::create_dir_all(&dir).map_err(|e| pragmatic_protocol::Error::Data(e.to_string()))?;
    let path = dir.join("mid.bin");
    save_checkpoint(&path, &first)?;
    println!("saved iteration {} to {}", first.iteration, path.display());

    let mut resumed = load_checkpoint(&path, config, train, test)?;
    resumed.run()?;
    let same = resumed.metrics == whole.metrics
        && resumed.student.belief.params.flat_values() == whole.student.belief.params.flat_values();
    println!("{} metric records, identical to the unbroken run: {same}", resumed.metrics.len());
    if let Some(last) = resumed.metrics.last() {
        println!("final accuracy {:.3}", last.accuracy.unwrap_or(f64::NAN));
    }
    Ok(())
}
