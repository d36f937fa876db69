//! The exact literal listener on one number-set game: posteriors for every
//! message, candidate levels, and what a literal teacher would say.

use pragmatic_protocol::belief::{literal_update, Belief};
use pragmatic_protocol::eval::{literal_expected_accuracy, LiteralTeacher};
use pragmatic_protocol::game::{Game, Instance};
use pragmatic_protocol::rtd::game_levels;

fn main() -> pragmatic_protocol::Result<()> {
    let c = |a: &[usize]| Instance::new(10, a.to_vec());
    let candidates = vec![c(&[0, 1, 5, 8])?, c(&[0, 4, 6])?, c(&[4, 8, 9])?, c(&[0, 1, 4, 5])?];
    let levels = game_levels(&candidates)?;
    for (i, (cand, level)) in candidates.iter().zip(&levels).enumerate() {
        println!("candidate {i}: {:?} level {level}", cand.attrs());
    }

    let uniform = Belief::uniform(candidates.len());
    println!("\nliteral posteriors from a uniform prior:");
    for m in 0..10 {
        let b = literal_update(&candidates, &uniform, m)?;
        println!("  message {m}: {:.3?}", b.probs());
    }

    let view: Vec<&Instance> = candidates.iter().collect();
    println!("\nliteral teacher:");
    for target in 0..candidates.len() {
        let m = LiteralTeacher.best_message(&view, target, &uniform)?;
        let game = Game::new(candidates.clone(), target)?;
        println!(
            "  target {target}: says {m}, literal student right with probability {:.3}",
            literal_expected_accuracy(&game)?
        );
    }
    Ok(())
}
