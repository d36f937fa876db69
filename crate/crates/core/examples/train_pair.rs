//! Trains a teacher and a student on 4-candidate number sets and reports
//! accuracy by level at the end of every phase.
//!
//! Settings are `key=value` arguments, e.g.
//! `cargo run --release --example train_pair -- iterations_per_phase=4000 teacher_iterations=2000`.

use std::sync::Arc;
use std::time::Instant;

use pragmatic_protocol::eval::{
    covariance_analysis, evaluate, heldout_target_games, literal_expected_accuracy, stability_eval, validity_eval,
    LiteralStudent, LiteralTeacher, SigmaFamily,
};
use pragmatic_protocol::io::apply_overrides;
use pragmatic_protocol::rtd::{game_levels, Level};
use pragmatic_protocol::trainer::{generate_datasets, RecordKind, TrainConfig, Trainer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pragmatic_protocol::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let config = apply_overrides(
        &TrainConfig {
            test_games: 2_000,
            ..Default::default()
        },
        args.iter().map(String::as_str),
    )?;
    let data = generate_datasets(&config, &mut ChaCha8Rng::seed_from_u64(config.seed))?;
    let train: Vec<_> = data.train.into_iter().map(Arc::new).collect();
    let test: Vec<_> = data.test.into_iter().map(Arc::new).collect();

    let level1: Vec<_> = test
        .iter()
        .filter(|g| game_levels(&g.candidates).unwrap()[g.target] == Level::Finite(1))
        .collect();
    let oracle: f64 = level1.iter().map(|g| literal_expected_accuracy(g).unwrap()).sum::<f64>() / level1.len() as f64;
    let literal = evaluate(&LiteralTeacher, &LiteralStudent, &test, 1)?;
    println!(
        "literal pair: overall {:.3}, level 1 {:.3} (exact {oracle:.3} over {} games)",
        literal.accuracy,
        literal.level_accuracy(1).unwrap_or(f64::NAN),
        level1.len()
    );

    let heldout = data.heldout_instances;
    let all_instances = config.space.enumerate()?;
    let space = config.space.clone();
    let k = config.candidates;
    let start = Instant::now();
    let mut trainer = Trainer::new(config, train, test.clone())?;
    if let Some(p) = &trainer.pretrain_report {
        println!("pretrained: held-out L1 {:.4} ({:.1?})", p.heldout_l1, start.elapsed());
    }
    let initial_student = trainer.student.clone();
    let mut shown = 0;
    while !trainer.finished() {
        trainer.step()?;
        for r in &trainer.metrics[shown..] {
            match r.kind {
                Some(RecordKind::Eval) => println!(
                    "[{:>6}] phase {} eval: acc {:.3} | L0 {:.3} L1 {:.3} L2 {:.3} Linf {:.3} | valid {:.3} ({:.0?})",
                    r.iteration,
                    r.phase,
                    r.accuracy.unwrap(),
                    r.level0.unwrap_or(f64::NAN),
                    r.level1.unwrap_or(f64::NAN),
                    r.level2.unwrap_or(f64::NAN),
                    r.level_inf.unwrap_or(f64::NAN),
                    r.validity.unwrap(),
                    start.elapsed()
                ),
                Some(RecordKind::Teacher) if std::env::var("VERBOSE").is_ok() => println!(
                    "[{:>6}] teacher: L^Q {:.4} L^Obv {:.4}",
                    r.iteration,
                    r.q_loss.unwrap(),
                    r.obverter_loss.unwrap()
                ),
                Some(RecordKind::Student) if std::env::var("VERBOSE").is_ok() => {
                    println!("[{:>6}] student: -J {:.4}", r.iteration, r.neg_objective.unwrap())
                }
                _ => {}
            }
        }
        shown = trainer.metrics.len();
    }

    let novel = heldout_target_games(&test, &heldout);
    let validity = validity_eval(&trainer.teacher, &novel)?;
    println!("validity on {} games with held-out targets: {validity:.3}", novel.len());
    let report = trainer.evaluate(&test, 7)?;
    for (b, name) in pragmatic_protocol::eval::LEVEL_BUCKETS.iter().enumerate() {
        let rows: Vec<_> = report.results.iter().filter(|r| pragmatic_protocol::eval::level_bucket(r.target_level) == b).collect();
        let v = rows.iter().filter(|r| r.valid).count() as f64 / rows.len().max(1) as f64;
        println!("level {name}: {} games, validity {v:.3}", rows.len());
    }
    let stab = stability_eval(&trainer.teacher, &trainer.student, &test, &SigmaFamily::Random(space.clone()), 11)?;
    println!("stability: mapped {:.3} unmapped {:.3}", stab.mapped_accuracy, stab.unmapped_accuracy);
    let frozen = stability_eval(&trainer.teacher, &initial_student, &test, &SigmaFamily::Random(space.clone()), 11)?;
    println!(
        "trained teacher with the pretrained student: mapped {:.3} unmapped {:.3}",
        frozen.mapped_accuracy, frozen.unmapped_accuracy
    );
    let cov = covariance_analysis(&trainer.teacher, &heldout[..20.min(heldout.len())], &all_instances, k, 100, 13)?;
    println!("covariance mean diagonal over {} targets: {:.5}", cov.targets, cov.mean_diagonal());
    Ok(())
}
