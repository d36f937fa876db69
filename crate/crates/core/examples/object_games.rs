//! Games over the 288 attribute-coded objects (color, shape, size, location):
//! sample a few, print them with names and levels, then score the literal
//! teacher and student on many.

use std::sync::Arc;

use pragmatic_protocol::eval::{evaluate, LiteralStudent, LiteralTeacher, LEVEL_BUCKETS};
use pragmatic_protocol::game::{sample_game, InstanceSpace};
use pragmatic_protocol::rtd::game_levels;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pragmatic_protocol::Result<()> {
    let space = InstanceSpace::objects();
    println!("{} objects, {} attributes", space.enumerate()?.len(), space.vocab());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..3 {
        let g = sample_game(&space, 4, &mut rng)?;
        let levels = game_levels(&g.candidates)?;
        println!("game, target {}:", g.target);
        for (c, level) in g.candidates.iter().zip(&levels) {
            let names: Vec<String> = c.attrs().iter().map(|&a| space.attr_name(a)).collect();
            println!("  {:<36} level {level}", names.join(" "));
        }
    }
    for k in [4, 7] {
        let games: Vec<_> = (0..2000)
            .map(|_| sample_game(&space, k, &mut rng).map(Arc::new))
            .collect::<Result<_, _>>()?;
        let r = evaluate(&LiteralTeacher, &LiteralStudent, &games, 0)?;
        let by_level: Vec<String> = LEVEL_BUCKETS
            .iter()
            .enumerate()
            .map(|(b, name)| format!("{name}: {:.3}", r.level_accuracy(b).unwrap_or(f64::NAN)))
            .collect();
        println!("literal pair, {k} candidates: {:.3} ({})", r.accuracy, by_level.join(", "));
    }
    Ok(())
}
