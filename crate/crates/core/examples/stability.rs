//! Trains a pair on a short schedule, then plays the test games twice: once
//! as is and once with the student seeing candidates and messages through a
//! random one-to-one relabelling of the attributes.
//!
//! cargo run --release --example stability -- [key=value ...]

use std::sync::Arc;

use pragmatic_protocol::eval::{stability_eval, SigmaFamily};
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
        test_games: 2000,
        ..Default::default()
    };
    let config = apply_overrides(&short, args.iter().map(String::as_str))?;
    let data = generate_datasets(&config, &mut ChaCha8Rng::seed_from_u64(config.seed))?;
    let test: Vec<_> = data.test.into_iter().map(Arc::new).collect();
    let space = config.space.clone();
    let mut trainer = Trainer::new(config, data.train.into_iter().map(Arc::new).collect(), test.clone())?;
    let initial = (trainer.teacher.clone(), trainer.student.clone());
    trainer.run()?;

    let family = SigmaFamily::Random(space);
    let before = stability_eval(&initial.0, &initial.1, &test, &family, 1)?;
    let after = stability_eval(&trainer.teacher, &trainer.student, &test, &family, 1)?;
    for (name, r) in [("pretrained only", before), ("after training", after)] {
        println!(
            "{name:<16} unmapped {:.3}  mapped {:.3}  drop {:+.3}",
            r.unmapped_accuracy,
            r.mapped_accuracy,
            r.unmapped_accuracy - r.mapped_accuracy
        );
    }
    Ok(())
}
