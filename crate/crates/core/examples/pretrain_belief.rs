//! Fits a belief network to the literal Bayesian listener and reports how far
//! its posteriors are from the exact ones on held-out games.
//!
//! cargo run --release --example pretrain_belief -- [steps] [batch] [lr]

use pragmatic_protocol::belief::{
    literal_update, mean_l1_vs_literal, pretrain_bayesian, sample_pretrain_case, Belief, BeliefNet,
    BeliefNetConfig,
};
use pragmatic_protocol::game::{Instance, InstanceSpace};
use pragmatic_protocol::kernel::Optimizer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pragmatic_protocol::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let steps: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(3000);
    let batch: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    let lr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1e-3);

    let space = InstanceSpace::number_set_4();
    let pool = space.enumerate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let heldout: Vec<_> = (0..1000)
        .map(|_| sample_pretrain_case(&pool, 4, space.num_messages(), &mut rng))
        .collect::<Result<_, _>>()?;
    let mut net = BeliefNet::new(BeliefNetConfig::new(space.vocab()), &mut rng)?;
    println!("untrained mean L1: {:.4}", mean_l1_vs_literal(&net, &heldout)?);

    let opt = if std::env::var("SGD").is_ok() { Optimizer::Sgd { lr, momentum: 0.9 } } else { Optimizer::adam(lr) };
    let chunk = (steps / 10).max(1);
    let mut done = 0;
    let start = std::time::Instant::now();
    while done < steps {
        let n = chunk.min(steps - done);
        let r = pretrain_bayesian(&mut net, &pool, 4, n, batch, &opt, &heldout, &mut rng)?;
        done += n;
        println!(
            "step {done:>6}  loss {:.5}  held-out L1 {:.5}  ({:.1}s)",
            r.final_loss,
            r.heldout_l1,
            start.elapsed().as_secs_f64()
        );
    }

    let c = |a: &[usize]| Instance::new(10, a.to_vec()).unwrap();
    let game = [c(&[1, 2, 3, 9]), c(&[1, 2, 4]), c(&[2, 3]), c(&[3, 4, 5])];
    for m in [9, 2, 4] {
        let net_b = net.update(&game, &Belief::uniform(4), m)?;
        let lit = literal_update(&game, &Belief::uniform(4), m)?;
        println!("message {m}: net {:.3?}  literal {:.3?}", net_b.probs(), lit.probs());
    }
    Ok(())
}
