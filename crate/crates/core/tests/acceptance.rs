//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.
//!
//! The training criteria share one full run with the default configuration,
//! which takes several minutes even with optimizations on.

use std::sync::Arc;
use std::time::Instant;

use pragmatic_protocol::belief::{
    literal_update, mean_l1_vs_literal, sample_pretrain_case, Belief, BeliefNet, BeliefNetConfig,
};
use pragmatic_protocol::eval::{
    covariance_analysis, heldout_target_games, literal_expected_accuracy, stability_eval, validity_eval, SigmaFamily,
};
use pragmatic_protocol::game::{sample_game, Action, Game, Instance, InstanceSpace};
use pragmatic_protocol::io::{decode_checkpoint, encode_checkpoint, MetricsWriter};
use pragmatic_protocol::kernel::{
    concat_context, concat_context_backward, cross_entropy, cross_entropy_grad, softmax, softmax_backward,
    Activation, Linear, ParamStore, Tensor2D,
};
use pragmatic_protocol::rtd::{
    game_levels, rtd, teaching_dimension, teaching_hierarchy, ConceptClass, Level,
};
use pragmatic_protocol::student::{returns, EpisodeStepRecord, StudentConfig, StudentModel};
use pragmatic_protocol::teacher::{TeacherConfig, TeacherModel, Transition};
use pragmatic_protocol::trainer::{generate_datasets, MetricRecord, TrainConfig, Trainer};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-3;
const TOLERANCE: f64 = 1e-4;
const CONFIGS: u64 = 20;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: usize, name: &'static str, pass: bool, detail: String) -> Outcome {
    let o = Outcome { id, name, pass, detail };
    println!(
        "[{}] {:>2} {}: {}",
        if o.pass { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.detail
    );
    o
}

// ---------------------------------------------------------------- gradients

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Fourth-order central difference of `f` at offset 0. Its truncation error is
/// O(H^4) and its rounding error about eps/H, both far below the tolerance
/// even for gradients near 1e-8 on losses of order one.
fn central_difference(mut f: impl FnMut(f64) -> f64) -> f64 {
    (8.0 * (f(H) - f(-H)) - (f(2.0 * H) - f(-2.0 * H))) / (12.0 * H)
}

/// Worst relative error between `analytic` and finite differences of `loss`
/// with respect to every entry of `x`.
fn worst_input_error(x: &mut [f64], analytic: &[f64], loss: impl Fn(&[f64]) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let orig = x[i];
        let fd = central_difference(|h| {
            x[i] = orig + h;
            loss(x)
        });
        x[i] = orig;
        worst = worst.max(rel_err(analytic[i], fd));
    }
    worst
}

/// Same, over every parameter of the stores returned by `stores`.
fn worst_param_error<M>(
    model: &mut M,
    stores: fn(&mut M) -> Vec<&mut ParamStore>,
    loss: impl Fn(&M) -> f64,
) -> f64 {
    let analytic: Vec<Vec<f64>> = stores(model).iter().map(|s| s.flat_grads()).collect();
    let mut worst: f64 = 0.0;
    for (s, grads) in analytic.iter().enumerate() {
        for (i, &g) in grads.iter().enumerate() {
            let orig = *stores(model)[s].flat_value_mut(i);
            let fd = central_difference(|h| {
                *stores(model)[s].flat_value_mut(i) = orig + h;
                loss(model)
            });
            *stores(model)[s].flat_value_mut(i) = orig;
            worst = worst.max(rel_err(g, fd));
        }
    }
    worst
}

fn random_tensor(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor2D {
    Tensor2D::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn weighted_sum(t: &Tensor2D, w: &Tensor2D) -> f64 {
    t.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

fn kernel_gradients() -> Vec<(&'static str, f64)> {
    let mut out = Vec::new();
    let mut worst = [0.0f64; 5];
    for seed in 0..CONFIGS {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (n, d_in, d_out) = (rng.gen_range(1..5), rng.gen_range(1..6), rng.gen_range(1..6));

        // linear: parameters and input
        let mut store = ParamStore::new();
        let lin = Linear::new(&mut store, "l", d_in, d_out, &mut rng);
        let mut x = random_tensor(n, d_in, &mut rng);
        let w = random_tensor(n, d_out, &mut rng);
        let dx = lin.backward(&mut store, &x, &w).unwrap();
        let mut pair = (store, lin);
        let e = worst_param_error(
            &mut pair,
            |p| vec![&mut p.0],
            |p| weighted_sum(&p.1.forward(&p.0, &x).unwrap(), &w),
        );
        let (store, lin) = pair;
        let shape = x.shape();
        let e2 = worst_input_error(x.data_mut(), dx.data(), |v| {
            let t = Tensor2D::from_vec(shape.0, shape.1, v.to_vec()).unwrap();
            weighted_sum(&lin.forward(&store, &t).unwrap(), &w)
        });
        worst[0] = worst[0].max(e).max(e2);

        // activations
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::Identity] {
            let mut x = random_tensor(n, d_in, &mut rng);
            let w = random_tensor(n, d_in, &mut rng);
            let g = act.backward(&act.apply(&x), &w);
            let e = worst_input_error(x.data_mut(), g.data(), |v| {
                weighted_sum(&act.apply(&Tensor2D::from_vec(n, d_in, v.to_vec()).unwrap()), &w)
            });
            worst[1] = worst[1].max(e);
        }

        // context concatenation
        let mut x = random_tensor(n, d_in, &mut rng);
        let w = random_tensor(n, 2 * d_in, &mut rng);
        let g = concat_context_backward(&w);
        let e = worst_input_error(x.data_mut(), g.data(), |v| {
            weighted_sum(&concat_context(&Tensor2D::from_vec(n, d_in, v.to_vec()).unwrap()), &w)
        });
        worst[2] = worst[2].max(e);

        // softmax with temperature
        let k = rng.gen_range(2..8);
        let beta = rng.gen_range(0.5..6.0);
        let mut logits: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = softmax(&logits, beta).unwrap();
        let g = softmax_backward(&p, &w, beta);
        let e = worst_input_error(&mut logits, &g, |v| {
            softmax(v, beta).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum()
        });
        worst[3] = worst[3].max(e);

        // cross entropy in the predicted distribution
        let target: Vec<f64> = {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|r| r / s).collect()
        };
        let mut pred: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
        let g = cross_entropy_grad(&target, &pred);
        let e = worst_input_error(&mut pred, &g, |v| cross_entropy(&target, v).unwrap());
        worst[4] = worst[4].max(e);
    }
    for (name, e) in ["linear", "activation", "context concat", "softmax", "cross entropy"]
        .into_iter()
        .zip(worst)
    {
        out.push((name, e));
    }
    out
}

fn belief_gradients() -> f64 {
    let space = InstanceSpace::number_set_4();
    let mut worst: f64 = 0.0;
    for seed in 0..CONFIGS {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let cfg = BeliefNetConfig {
            hidden: rng.gen_range(3..8),
            depth: rng.gen_range(1..3),
            ..BeliefNetConfig::new(space.vocab())
        };
        let mut net = BeliefNet::new(cfg, &mut rng).unwrap();
        let k = rng.gen_range(2..5);
        let g = sample_game(&space, k, &mut rng).unwrap();
        let m = rng.gen_range(0..space.vocab());
        let prior = Belief::from_weights((0..k).map(|_| rng.gen_range(0.1..1.0)).collect()).unwrap();
        let target = Belief::from_weights((0..k).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let trace = net.encode(&g.candidates).unwrap();
        let head = net.head(trace.embedding(), &prior, m).unwrap();
        let d_post = cross_entropy_grad(target.probs(), &head.posterior);
        let d_logits = BeliefNet::head_backward(&head, &prior, &d_post);
        let mut d_e = Tensor2D::zeros(k, space.vocab());
        BeliefNet::scatter_logit_grad(&mut d_e, m, &d_logits);
        net.encode_backward(&trace, &d_e).unwrap();
        let e = worst_param_error(
            &mut net,
            |n| vec![&mut n.params],
            |n| cross_entropy(target.probs(), n.update(&g.candidates, &prior, m).unwrap().probs()).unwrap(),
        );
        worst = worst.max(e);
    }
    worst
}

fn random_belief(k: usize, rng: &mut ChaCha8Rng) -> Belief {
    Belief::from_weights((0..k).map(|_| rng.gen_range(0.05..1.0)).collect()).unwrap()
}

fn shuffled_game(space: &InstanceSpace, k: usize, rng: &mut ChaCha8Rng) -> Game {
    let mut g = sample_game(space, k, rng).unwrap();
    g.teacher_perm.shuffle(rng);
    g.student_perm.shuffle(rng);
    g
}

fn teacher_gradients() -> f64 {
    let space = InstanceSpace::number_set_4();
    let mut worst: f64 = 0.0;
    for seed in 0..CONFIGS {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let cfg = BeliefNetConfig {
            hidden: rng.gen_range(3..7),
            ..BeliefNetConfig::new(space.vocab())
        };
        let tcfg = TeacherConfig {
            q_hidden: rng.gen_range(2..7),
            lambda: rng.gen_range(0.0..2.0),
            ..Default::default()
        };
        let mut teacher = TeacherModel::new(cfg, tcfg, &mut rng).unwrap();
        let transitions: Vec<Transition> = (0..rng.gen_range(1..4))
            .map(|_| Transition {
                game: Arc::new(shuffled_game(&space, 4, &mut rng)),
                prior: random_belief(4, &mut rng),
                message: rng.gen_range(0..space.vocab()),
                next_belief: random_belief(4, &mut rng),
                reward: -0.1,
                terminal: rng.gen_bool(0.5),
            })
            .collect();
        let batch: Vec<&Transition> = transitions.iter().collect();
        let targets: Vec<f64> = batch.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        teacher.accumulate_batch(&batch, &targets).unwrap();
        let lambda = teacher.config.lambda;
        let e = worst_param_error(
            &mut teacher,
            |t| t.online.stores_mut().into_iter().collect(),
            |t| {
                batch
                    .iter()
                    .zip(&targets)
                    .map(|(tr, &xi)| {
                        let l = t.transition_loss(tr, xi).unwrap();
                        (l.q_loss + lambda * l.obverter_loss) / batch.len() as f64
                    })
                    .sum()
            },
        );
        worst = worst.max(e);
    }
    worst
}

fn student_gradients() -> f64 {
    let space = InstanceSpace::number_set_4();
    let mut worst: f64 = 0.0;
    for seed in 0..CONFIGS {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let cfg = BeliefNetConfig {
            hidden: rng.gen_range(3..7),
            ..BeliefNetConfig::new(space.vocab())
        };
        let scfg = StudentConfig {
            baseline: rng.gen_range(-0.5..0.5),
            initial_wait: rng.gen_range(0.05..0.6),
            ..StudentConfig::new(4)
        };
        let mut student = StudentModel::new(cfg, scfg, &mut rng).unwrap();
        // move the gate off its constant initialization
        for v in student.gate_params.iter_mut().flat_map(|p| p.value.iter_mut()) {
            *v += rng.gen_range(-1.0..1.0);
        }
        let episodes: Vec<Vec<EpisodeStepRecord>> = (0..2)
            .map(|_| {
                (0..rng.gen_range(1..3))
                    .map(|_| EpisodeStepRecord {
                        game: Arc::new(shuffled_game(&space, 4, &mut rng)),
                        prior: random_belief(4, &mut rng),
                        message: rng.gen_range(0..space.vocab()),
                        action: if rng.gen_bool(0.3) {
                            Action::Wait
                        } else {
                            Action::Pick(rng.gen_range(0..4))
                        },
                        reward: rng.gen_range(-0.2..1.0),
                    })
                    .collect()
            })
            .collect();
        let gamma = 0.9;
        student.accumulate_objective(&episodes, gamma).unwrap();
        let baseline = student.config.baseline;
        let e = worst_param_error(
            &mut student,
            |s| s.stores_mut().into_iter().collect(),
            |s| {
                let n: usize = episodes.iter().map(Vec::len).sum();
                let mut neg_j = 0.0;
                for ep in &episodes {
                    let rw: Vec<f64> = ep.iter().map(|r| r.reward).collect();
                    for (rec, ret) in ep.iter().zip(returns(&rw, gamma).unwrap()) {
                        neg_j -= s.log_prob(rec).unwrap() * (ret - baseline) / n as f64;
                    }
                }
                neg_j
            },
        );
        worst = worst.max(e);
    }
    worst
}

fn criterion_gradients() -> Outcome {
    let start = Instant::now();
    let mut checks = kernel_gradients();
    checks.push(("belief net", belief_gradients()));
    checks.push(("teacher loss", teacher_gradients()));
    checks.push(("student objective", student_gradients()));
    let worst = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    let detail = checks
        .iter()
        .map(|(n, e)| format!("{n} {e:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    let secs = start.elapsed().as_secs_f64();
    outcome(
        1,
        "gradient correctness",
        worst <= TOLERANCE && secs < 60.0,
        format!("worst relative error {worst:.2e} over {CONFIGS} configurations each ({detail}) in {secs:.1}s"),
    )
}

// ------------------------------------------------------------- pretraining

fn criterion_pretraining(pretrained: &BeliefNet, space: &InstanceSpace, secs: f64) -> Outcome {
    let pool = space.enumerate().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cases: Vec<_> = (0..1000).map(|_| sample_pretrain_case(&pool, 4, space.num_messages(), &mut rng).unwrap()).collect();
    let l1 = mean_l1_vs_literal(pretrained, &cases).unwrap();
    // sanity: the oracle itself is a proper posterior
    let c = &cases[0];
    let literal = literal_update(&c.candidates, &Belief::uniform(4), c.message).unwrap();
    let sane = (literal.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9;
    outcome(
        2,
        "pretraining fidelity",
        l1 <= 0.02 && sane && secs < 600.0,
        format!("mean L1 to the literal update {l1:.4} over 1000 pairs over the whole space (pretraining {secs:.0}s)"),
    )
}

// ------------------------------------------------------------------ rtd

fn criterion_rtd() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ok = true;
    let mut checked = 0;
    while checked < 200 {
        let n = rng.gen_range(1..=8);
        let size = rng.gen_range(1..=6);
        let mut rows: Vec<Vec<bool>> = (0..size).map(|_| (0..n).map(|_| rng.gen_bool(0.5)).collect()).collect();
        rows.sort();
        rows.dedup();
        let class = ConceptClass::new(n, rows.clone()).unwrap();
        let h = teaching_hierarchy(&class);
        let mut seen: Vec<usize> = h.levels.iter().flat_map(|l| l.0.iter().copied()).collect();
        seen.sort_unstable();
        let partitions = seen == (0..rows.len()).collect::<Vec<_>>();
        let max_td = (0..rows.len()).map(|c| teaching_dimension(&class, c).unwrap()).max().unwrap();
        ok &= partitions && rtd(&class) <= max_td;
        checked += 1;
    }
    // columns: blue, red, sphere, cone; row 0 is the blue sphere
    let fig = ConceptClass::parse("1010\n0110\n1001\n").unwrap();
    let td_blue_sphere = teaching_dimension(&fig, 0).unwrap();
    let r = rtd(&fig);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        6,
        "teaching dimension oracle",
        ok && td_blue_sphere == 2 && r == 1 && secs < 60.0,
        format!("{checked} random classes consistent: {ok}; three-object class TD(blue sphere) {td_blue_sphere}, RTD {r}"),
    )
}

// ------------------------------------------------------- persistence

fn small_config() -> TrainConfig {
    TrainConfig {
        phases: 2,
        iterations_per_phase: 60,
        teacher_iterations: 30,
        batch: 8,
        student_episodes: 4,
        hidden: 16,
        q_hidden: 16,
        pretrain_steps: 50,
        eval_interval: 20,
        log_interval: 5,
        sync_interval: 4,
        max_rounds: 2,
        train_games: 500,
        test_games: 100,
        seed: 11,
        ..Default::default()
    }
}

fn small_trainer() -> Trainer {
    let config = small_config();
    let d = generate_datasets(&config, &mut ChaCha8Rng::seed_from_u64(config.seed)).unwrap();
    Trainer::new(config, arcs(d.train), arcs(d.test)).unwrap()
}

fn metrics_bytes(records: &[MetricRecord]) -> (Vec<u8>, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("metrics.jsonl");
    let mut w = MetricsWriter::create(&path).unwrap();
    for r in records {
        w.write(r).unwrap();
    }
    drop(w);
    (
        std::fs::read(&path).unwrap(),
        std::fs::read(path.with_extension("csv")).unwrap(),
    )
}

fn criterion_persistence() -> Outcome {
    let mut a = small_trainer();
    a.run().unwrap();
    let mut b = small_trainer();
    b.run().unwrap();
    let identical_metrics = metrics_bytes(&a.metrics) == metrics_bytes(&b.metrics) && !a.metrics.is_empty();

    let mut first = small_trainer();
    first.run_until(45).unwrap(); // inside phase one's student half
    let bytes = encode_checkpoint(&first);
    let mut resumed = decode_checkpoint(&bytes, small_config(), arcs_of(&a, true), arcs_of(&a, false)).unwrap();
    resumed.run().unwrap();
    let resume_exact = resumed.metrics == a.metrics && encode_checkpoint(&resumed) == encode_checkpoint(&a);
    outcome(
        10,
        "determinism and persistence",
        identical_metrics && resume_exact,
        format!(
            "{} metric records byte-identical across runs: {identical_metrics}; resume at iteration 45 matches: {resume_exact}",
            a.metrics.len()
        ),
    )
}

fn arcs(games: Vec<Game>) -> Vec<Arc<Game>> {
    games.into_iter().map(Arc::new).collect()
}

fn arcs_of(t: &Trainer, train: bool) -> Vec<Arc<Game>> {
    if train {
        t.train_games().to_vec()
    } else {
        t.eval_games().to_vec()
    }
}

// ------------------------------------------------------------ training run

fn level_one_oracle(games: &[Arc<Game>]) -> f64 {
    let level1: Vec<_> = games
        .iter()
        .filter(|g| game_levels(&g.candidates).unwrap()[g.target] == Level::Finite(1))
        .collect();
    level1.iter().map(|g| literal_expected_accuracy(g).unwrap()).sum::<f64>() / level1.len() as f64
}

#[test]
fn acceptance() {
    let mut results = vec![criterion_gradients(), criterion_rtd(), criterion_persistence()];

    let config = TrainConfig::default();
    let data = generate_datasets(&config, &mut ChaCha8Rng::seed_from_u64(config.seed)).unwrap();
    let all_test = arcs(data.test);
    let eval: Vec<Arc<Game>> = all_test[..2000].to_vec();
    let space = config.space.clone();
    let per_phase = config.iterations_per_phase as u64;

    let start = Instant::now();
    let mut trainer = Trainer::new(config.clone(), arcs(data.train), eval.clone()).unwrap();
    let pretrain_secs = start.elapsed().as_secs_f64();
    results.push(criterion_pretraining(&trainer.teacher.online.belief, &space, pretrain_secs));

    let start = Instant::now();
    trainer.run_until(per_phase).unwrap();
    let phase1 = trainer.metrics.last().unwrap().clone();
    let phase1_secs = start.elapsed().as_secs_f64();
    let level0 = phase1.level0.unwrap_or(f64::NAN);
    results.push(outcome(
        3,
        "level-0 mastery after phase 1",
        level0 >= 0.95 && phase1_secs < 1800.0,
        format!(
            "level-0 accuracy {level0:.3} on 2000 held-out games after {per_phase} iterations ({phase1_secs:.0}s)"
        ),
    ));

    trainer.run_until(2 * per_phase).unwrap();
    let phase2 = trainer.metrics.last().unwrap().clone();
    let oracle = level_one_oracle(&eval);
    let (l1_before, l1_after) = (phase1.level1.unwrap_or(f64::NAN), phase2.level1.unwrap_or(f64::NAN));
    results.push(outcome(
        4,
        "pragmatic gain after phase 2",
        l1_after - l1_before >= 0.10 && l1_after - oracle >= 0.10,
        format!("level-1 accuracy {l1_before:.3} -> {l1_after:.3}; literal protocol exact {oracle:.3}"),
    ));

    trainer.run().unwrap();
    let last = trainer.metrics.last().unwrap().clone();
    let overall = last.accuracy.unwrap_or(f64::NAN);
    results.push(outcome(
        5,
        "overall accuracy after the full run",
        overall >= 0.95,
        format!(
            "accuracy {overall:.3} on 2000 held-out games after {} phases",
            trainer.config.phases
        ),
    ));

    let s = stability_eval(&trainer.teacher, &trainer.student, &eval, &SigmaFamily::Random(space.clone()), 7)
        .unwrap();
    let drop = s.unmapped_accuracy - s.mapped_accuracy;
    results.push(outcome(
        7,
        "stability under relabelling",
        drop.abs() <= 0.05,
        format!(
            "mapped {:.3} vs unmapped {:.3} on {} games",
            s.mapped_accuracy, s.unmapped_accuracy, s.games
        ),
    ));

    let novel = heldout_target_games(&all_test, &data.heldout_instances);
    let validity = validity_eval(&trainer.teacher, &novel).unwrap();
    results.push(outcome(
        8,
        "validity on held-out targets",
        validity >= 0.95,
        format!("{validity:.3} over {} games whose target never appears in training", novel.len()),
    ));

    let targets: Vec<Instance> = data.heldout_instances.iter().take(20).cloned().collect();
    let pool = space.enumerate().unwrap();
    let cov = covariance_analysis(&trainer.teacher, &targets, &pool, config.candidates, 100, 9).unwrap();
    let diag = cov.mean_diagonal();
    results.push(outcome(
        9,
        "message/distractor covariance",
        diag < 0.0 && cov.targets >= 20,
        format!("mean diagonal {diag:.4} over {} targets x 100 games", cov.targets),
    ));

    results.sort_by_key(|o| o.id);
    println!("\nsummary:");
    for o in &results {
        println!("[{}] {:>2} {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.name);
    }
    let failed: Vec<String> = results.iter().filter(|o| !o.pass).map(|o| format!("{} ({})", o.id, o.detail)).collect();
    assert!(failed.is_empty(), "failed criteria: {}", failed.join("; "));
}
