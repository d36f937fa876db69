use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{decode_belief_net, encode_belief_net, is_trainer_checkpoint, load_checkpoint, save_checkpoint};
use super::config::load_config;
use super::dataset::{read_dataset, read_instances, write_dataset, write_instances};
use super::metrics::{write_covariance_csv, write_eval_csv, MetricsWriter};
use crate::belief::BeliefNet;
use crate::error::{Error, Result};
use crate::eval::{
    check_exclusive, covariance_analysis, heldout_target_games, stability_eval, validity_eval, SigmaFamily,
};
use crate::game::{Game, Instance};
use crate::rtd::{rtd, teaching_hierarchy, ConceptClass};
use crate::trainer::{generate_datasets, pretrain_shared, TrainConfig, Trainer, SNAPSHOT_SEED};

pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const TRAIN_INSTANCES_FILE: &str = "train_instances.jsonl";
pub const HELDOUT_INSTANCES_FILE: &str = "heldout_instances.jsonl";

const COVARIANCE_GAMES_PER_TARGET: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "pragma", version, about = "Teacher/student referential games: data, training and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// `key = value` configuration file; unset keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Run seed for gen-data, pretrain and train; evaluation seed otherwise.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "pragma-out")]
    pub out: PathBuf,
    /// Training checkpoint, or a pretrained belief network for `train`.
    #[arg(long, global = true, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,
    /// Dataset directory written by gen-data, or a single games file.
    #[arg(long, global = true, value_name = "PATH")]
    pub games: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample mutually exclusive train and test games.
    GenData,
    /// Fit a belief network to the literal update and save it.
    Pretrain,
    /// Alternate teacher and student training; resumes from --checkpoint.
    Train,
    /// Accuracy by level, hard games and validity of a trained pair.
    Eval,
    /// Teaching hierarchy and recursive teaching dimension of a concept class.
    Rtd {
        /// One binary vector per line.
        class: PathBuf,
    },
    /// Accuracy with and without an attribute relabelling on the student side.
    Stability,
    /// Message/distractor covariance of a trained teacher.
    Covariance,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::GenData => gen_data(cli, out),
        Command::Pretrain => pretrain(cli, out),
        Command::Train => train(cli, out),
        Command::Eval => eval(cli, out),
        Command::Rtd { class } => rtd_report(class, out),
        Command::Stability => stability(cli, out),
        Command::Covariance => covariance(cli, out),
    }
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

/// Configuration file (or defaults), with `--seed` applied when
/// `seed_is_run` is set.
fn config(cli: &Cli, seed_is_run: bool) -> Result<TrainConfig> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => TrainConfig::default(),
    };
    if seed_is_run {
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
    }
    config.validate()?;
    Ok(config)
}

fn eval_seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or(SNAPSHOT_SEED)
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn arc(games: Vec<Game>) -> Vec<Arc<Game>> {
    games.into_iter().map(Arc::new).collect()
}

/// Games for evaluation: the test file of a dataset directory or a games file.
fn eval_games(cli: &Cli, config: &TrainConfig) -> Result<Vec<Arc<Game>>> {
    let path = cli
        .games
        .as_ref()
        .ok_or_else(|| Error::Config("--games is required".into()))?;
    let file = if path.is_dir() { path.join(TEST_FILE) } else { path.clone() };
    let games = read_dataset(&file)?;
    if games.is_empty() {
        return Err(Error::Data(format!("{} holds no games", file.display())));
    }
    check_shape(&games, config, &file)?;
    Ok(arc(games))
}

fn check_shape(games: &[Game], config: &TrainConfig, file: &Path) -> Result<()> {
    match games
        .iter()
        .find(|g| g.vocab() != config.space.vocab() || g.num_candidates() != config.candidates)
    {
        Some(g) => Err(Error::Config(format!(
            "{}: games have {} candidates over {} attributes, configuration expects {} over {}",
            file.display(),
            g.num_candidates(),
            g.vocab(),
            config.candidates,
            config.space.vocab()
        ))),
        None => Ok(()),
    }
}

/// Held-out instances next to the games, if the dataset directory has them.
fn heldout(cli: &Cli) -> Result<Option<Vec<Instance>>> {
    match &cli.games {
        Some(dir) if dir.is_dir() => {
            let path = dir.join(HELDOUT_INSTANCES_FILE);
            if path.exists() {
                Ok(Some(read_instances(&path)?))
            } else {
                Ok(None)
            }
        }
        _ => Ok(None),
    }
}

fn trained_pair(cli: &Cli, config: &TrainConfig) -> Result<Trainer> {
    let path = cli
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::Config("--checkpoint is required".into()))?;
    load_checkpoint(path, config.clone(), Vec::new(), Vec::new())
}

fn gen_data(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let config = config(cli, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let data = generate_datasets(&config, &mut rng)?;
    check_exclusive(&data.train, &data.test)?;
    create_out(&cli.out)?;
    write_dataset(&cli.out.join(TRAIN_FILE), &data.train)?;
    write_dataset(&cli.out.join(TEST_FILE), &data.test)?;
    write_instances(&cli.out.join(TRAIN_INSTANCES_FILE), &data.train_instances)?;
    write_instances(&cli.out.join(HELDOUT_INSTANCES_FILE), &data.heldout_instances)?;
    say(
        out,
        format_args!(
            "wrote {} train and {} test games ({} train / {} held-out instances) to {}",
            data.train.len(),
            data.test.len(),
            data.train_instances.len(),
            data.heldout_instances.len(),
            cli.out.display()
        ),
    )
}

/// Training games and the evaluation games from `--games`, or freshly
/// generated from the configuration.
type Split = (Vec<Arc<Game>>, Vec<Arc<Game>>);

fn train_and_test(cli: &Cli, config: &TrainConfig) -> Result<Split> {
    match &cli.games {
        Some(dir) => {
            let train_path = dir.join(TRAIN_FILE);
            let test_path = dir.join(TEST_FILE);
            let train = read_dataset(&train_path)?;
            let test = read_dataset(&test_path)?;
            check_shape(&train, config, &train_path)?;
            check_shape(&test, config, &test_path)?;
            check_exclusive(&train, &test)?;
            Ok((arc(train), arc(test)))
        }
        None => {
            let data = generate_datasets(config, &mut ChaCha8Rng::seed_from_u64(config.seed))?;
            Ok((arc(data.train), arc(data.test)))
        }
    }
}

fn pretrain(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let config = config(cli, true)?;
    let pool = match &cli.games {
        Some(dir) => read_instances(&dir.join(TRAIN_INSTANCES_FILE))?,
        None => {
            generate_datasets(&config, &mut ChaCha8Rng::seed_from_u64(config.seed))?.train_instances
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (net, report) = pretrain_shared(&config, &pool, &mut rng)?;
    create_out(&cli.out)?;
    let path = cli.out.join("belief.bin");
    std::fs::write(&path, encode_belief_net(&net)).map_err(|e| Error::io(&path, e))?;
    say(
        out,
        format_args!(
            "pretrained {} steps: final loss {:.4}, held-out L1 vs literal {:.4}; saved {}",
            report.steps,
            report.final_loss,
            report.heldout_l1,
            path.display()
        ),
    )
}

fn train(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let config = config(cli, true)?;
    let (train_games, test_games) = train_and_test(cli, &config)?;
    let mut trainer = match &cli.checkpoint {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            if is_trainer_checkpoint(&bytes) {
                load_checkpoint(path, config, train_games, test_games)?
            } else {
                let mut net = BeliefNet::new(config.belief_config(), &mut ChaCha8Rng::seed_from_u64(0))?;
                decode_belief_net(&bytes, &mut net).map_err(|e| e.with_context(path.display().to_string()))?;
                Trainer::with_belief(config, &net, train_games, test_games)?
            }
        }
        None => Trainer::new(config, train_games, test_games)?,
    };
    if let Some(r) = &trainer.pretrain_report {
        say(out, format_args!("pretrained belief: held-out L1 vs literal {:.4}", r.heldout_l1))?;
    }
    create_out(&cli.out)?;
    let mut metrics = MetricsWriter::create(&cli.out.join("metrics.jsonl"))?;
    for m in &trainer.metrics {
        metrics.write(m)?;
    }
    let ckpt = cli.out.join("checkpoint.bin");
    while !trainer.finished() {
        let written = trainer.metrics.len();
        trainer.step()?;
        for m in &trainer.metrics[written..] {
            metrics.write(m)?;
        }
        let (phase, within) = trainer.cursor();
        if within == 0 {
            save_checkpoint(&ckpt, &trainer)?;
            if let Some(m) = trainer.metrics.last().filter(|m| m.accuracy.is_some()) {
                say(
                    out,
                    format_args!(
                        "phase {phase} done at iteration {}: accuracy {:.3}, hard {:.3}, validity {:.3}",
                        trainer.iteration,
                        m.accuracy.unwrap_or(f64::NAN),
                        m.hard_accuracy.unwrap_or(f64::NAN),
                        m.validity.unwrap_or(f64::NAN)
                    ),
                )?;
            }
        }
    }
    save_checkpoint(&ckpt, &trainer)?;
    say(out, format_args!("saved {}", ckpt.display()))
}

fn eval(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let config = config(cli, false)?;
    let games = eval_games(cli, &config)?;
    let pair = trained_pair(cli, &config)?;
    let report = pair.evaluate(&games, eval_seed(cli))?;
    create_out(&cli.out)?;
    write_eval_csv(&cli.out.join("eval.csv"), &report)?;
    say(
        out,
        format_args!(
            "games {} accuracy {:.4} hard {:.4} mean gain {:.4} validity {:.4}",
            report.games, report.accuracy, report.hard_accuracy, report.mean_gain, report.validity
        ),
    )?;
    for (name, stats) in ["0", "1", "2+", "inf"].iter().zip(&report.levels) {
        say(out, format_args!("level {name}: {} games, accuracy {:.4}", stats.games, stats.accuracy().unwrap_or(f64::NAN)))?;
    }
    if let Some(heldout) = heldout(cli)? {
        let novel = heldout_target_games(&games, &heldout);
        if !novel.is_empty() {
            let v = validity_eval(&pair.teacher, &novel)?;
            say(out, format_args!("validity on {} held-out targets {:.4}", novel.len(), v))?;
        }
    }
    Ok(())
}

fn rtd_report(class: &Path, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(class).map_err(|e| Error::io(class, e))?;
    let class = ConceptClass::parse(&text)?;
    let hierarchy = teaching_hierarchy(&class);
    for (j, (concepts, d)) in hierarchy.levels.iter().enumerate() {
        say(out, format_args!("level {j}: concepts {concepts:?} d = {d}"))?;
    }
    say(out, format_args!("RTD = {}", rtd(&class)))
}

fn stability(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let config = config(cli, false)?;
    let games = eval_games(cli, &config)?;
    let pair = trained_pair(cli, &config)?;
    let family = SigmaFamily::Random(config.space.clone());
    let r = stability_eval(&pair.teacher, &pair.student, &games, &family, eval_seed(cli))?;
    say(
        out,
        format_args!(
            "games {} unmapped accuracy {:.4} mapped accuracy {:.4} drop {:.4}",
            r.games,
            r.unmapped_accuracy,
            r.mapped_accuracy,
            r.unmapped_accuracy - r.mapped_accuracy
        ),
    )
}

fn covariance(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let config = config(cli, false)?;
    let pair = trained_pair(cli, &config)?;
    let pool = config.space.enumerate()?;
    let targets = heldout(cli)?.unwrap_or_else(|| pool.clone());
    let cov = covariance_analysis(
        &pair.teacher,
        &targets,
        &pool,
        config.candidates,
        COVARIANCE_GAMES_PER_TARGET,
        eval_seed(cli),
    )?;
    create_out(&cli.out)?;
    let path = cli.out.join("covariance.csv");
    write_covariance_csv(&path, &cov, &config.space)?;
    say(
        out,
        format_args!(
            "{} targets, mean diagonal {:.4}; wrote {}",
            cov.targets,
            cov.mean_diagonal(),
            path.display()
        ),
    )
}
