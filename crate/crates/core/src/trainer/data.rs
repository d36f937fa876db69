use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::game::{sample_game_from, Game, Instance, InstanceSpace};

/// Training and test games with mutually exclusive candidate sets.
#[derive(Clone, Debug)]
pub struct Datasets {
    pub train: Vec<Game>,
    pub test: Vec<Game>,
    /// Instances allowed in training games.
    pub train_instances: Vec<Instance>,
    /// Instances that never appear in a training game.
    pub heldout_instances: Vec<Instance>,
}

/// Shuffles the space and sets aside `round(fraction * |space|)` instances.
pub fn split_instances<R: Rng + ?Sized>(
    space: &InstanceSpace,
    fraction: f64,
    rng: &mut R,
) -> Result<(Vec<Instance>, Vec<Instance>)> {
    let mut all = space.enumerate()?;
    all.shuffle(rng);
    let held = (fraction * all.len() as f64).round() as usize;
    let train = all.split_off(held);
    let mut heldout = all;
    let mut train = train;
    train.sort();
    heldout.sort();
    Ok((train, heldout))
}

/// Training games use only training instances; test games use the whole
/// space and skip any candidate set already used for training.
pub fn generate_datasets<R: Rng + ?Sized>(config: &TrainConfig, rng: &mut R) -> Result<Datasets> {
    config.validate()?;
    let (train_instances, heldout_instances) = split_instances(&config.space, config.holdout_fraction, rng)?;
    let all = config.space.enumerate()?;
    let k = config.candidates;
    if train_instances.len() < k {
        return Err(Error::Config(format!(
            "{} training instances cannot fill {k} candidates",
            train_instances.len()
        )));
    }
    let configure = |mut g: Game| {
        g.message_cost = config.message_cost;
        g.max_rounds = config.max_rounds;
        g
    };
    let mut train = Vec::with_capacity(config.train_games);
    let mut fingerprints = HashSet::with_capacity(config.train_games);
    for _ in 0..config.train_games {
        let g = configure(sample_game_from(&train_instances, k, rng)?);
        fingerprints.insert(g.fingerprint());
        train.push(g);
    }
    let mut test = Vec::with_capacity(config.test_games);
    let mut attempts = 0usize;
    while test.len() < config.test_games {
        attempts += 1;
        if attempts > 100 * config.test_games.max(1) {
            return Err(Error::Data(format!(
                "could only draw {} test games disjoint from training",
                test.len()
            )));
        }
        let g = configure(sample_game_from(&all, k, rng)?);
        if !fingerprints.contains(&g.fingerprint()) {
            test.push(g);
        }
    }
    Ok(Datasets {
        train,
        test,
        train_instances,
        heldout_instances,
    })
}
