use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{EntailmentNet, NetShape};
use super::EncodedExample;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaTrainConfig {
    pub filters: usize,
    pub filter_len: usize,
    pub pool: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop a restart after this many epochs without a lower validation
    /// loss; 0 disables early stopping.
    pub patience: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init_range: f64,
    pub validation_fraction: f64,
}

impl Default for QaTrainConfig {
    fn default() -> Self {
        QaTrainConfig {
            filters: 10,
            filter_len: 2,
            pool: 100,
            hidden1: 200,
            hidden2: 200,
            learning_rate: 0.01,
            batch_size: 16,
            epochs: 200,
            patience: 20,
            restarts: 10,
            seed: 0,
            init_range: 0.05,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartScore {
    pub seed: u64,
    pub validation_accuracy: f64,
    pub validation_loss: f64,
    pub training_accuracy: f64,
    pub epochs_run: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaTrainReport {
    pub net: EntailmentNet,
    pub restarts: Vec<RestartScore>,
    /// Index into `restarts` of the returned network.
    pub chosen: usize,
    pub training_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub config: QaTrainConfig,
}

impl QaTrainReport {
    pub fn chosen_score(&self) -> &RestartScore {
        &self.restarts[self.chosen]
    }
}

fn accuracy(net: &EntailmentNet, set: &[&EncodedExample]) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for ex in set {
        if net.predict(&ex.input, &ex.aux)? == ex.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / set.len() as f64)
}

fn mean_loss(net: &EntailmentNet, set: &[&EncodedExample]) -> Result<f64> {
    let mut total = 0.0;
    for ex in set {
        total += net.loss(&ex.input, &ex.aux, ex.label)?;
    }
    Ok(total / set.len().max(1) as f64)
}

/// Downsamples the majority label, holds out a validation slice, and
/// trains one network per restart seed. The restart with the highest
/// validation accuracy wins; ties go to the earliest seed.
pub fn train_qa(examples: &[EncodedExample], config: &QaTrainConfig) -> Result<QaTrainReport> {
    let (yes, no): (Vec<&EncodedExample>, Vec<&EncodedExample>) = examples.iter().partition(|e| e.label);
    if yes.len() < 2 || no.len() < 2 {
        return Err(Error::Data(format!(
            "need at least 2 examples per class, have {} YES and {} NO",
            yes.len(),
            no.len()
        )));
    }
    if config.restarts == 0 || config.epochs == 0 || config.batch_size == 0 {
        return Err(Error::InvalidParam("restarts, epochs and batch size must be positive".into()));
    }
    let first = &examples[0];
    if examples.iter().any(|e| e.input.len() != first.input.len() || e.aux.len() != first.aux.len()) {
        return Err(Error::Shape("examples disagree on input or auxiliary width".into()));
    }
    if first.input.len() % 2 != 0 {
        return Err(Error::Shape(format!("odd input length {}", first.input.len())));
    }
    let shape = NetShape {
        d: first.input.len() / 2,
        filters: config.filters,
        filter_len: config.filter_len,
        pool: config.pool,
        hidden1: config.hidden1,
        hidden2: config.hidden2,
        aux_width: first.aux.len(),
    };
    shape.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut yes, mut no) = (yes, no);
    yes.shuffle(&mut rng);
    no.shuffle(&mut rng);
    let n_class = yes.len().min(no.len());
    let mut pool: Vec<&EncodedExample> = yes[..n_class].iter().chain(&no[..n_class]).copied().collect();
    pool.shuffle(&mut rng);

    let n_val = ((pool.len() as f64 * config.validation_fraction).round() as usize).clamp(1, pool.len() - 1);
    let (val, train) = pool.split_at(n_val);

    let mut restarts: Vec<RestartScore> = Vec::with_capacity(config.restarts);
    let mut best: Option<(usize, EntailmentNet)> = None;
    for r in 0..config.restarts {
        let seed = config.seed.wrapping_add(r as u64);
        let (net, score) = train_one(shape.clone(), seed, train, val, config)?;
        let better = match &best {
            None => true,
            Some((b, _)) => score.validation_accuracy > restarts[*b].validation_accuracy,
        };
        restarts.push(score);
        if better {
            best = Some((r, net));
        }
    }
    let (chosen, net) = best.expect("at least one restart");
    Ok(QaTrainReport {
        net,
        restarts,
        chosen,
        training_ids: train.iter().map(|e| e.id.clone()).collect(),
        validation_ids: val.iter().map(|e| e.id.clone()).collect(),
        config: config.clone(),
    })
}

fn train_one(
    shape: NetShape,
    seed: u64,
    train: &[&EncodedExample],
    val: &[&EncodedExample],
    config: &QaTrainConfig,
) -> Result<(EntailmentNet, RestartScore)> {
    let mut net = EntailmentNet::init(shape, seed, config.init_range)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best_loss = mean_loss(&net, val)?;
    let mut best_net = net.clone();
    let mut stale = 0usize;
    let mut epochs_run = 0usize;
    for _ in 0..config.epochs {
        epochs_run += 1;
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let (_, g) = net.batch_gradient(
                batch
                    .iter()
                    .map(|&i| (train[i].input.as_slice(), train[i].aux.as_slice(), train[i].label)),
            )?;
            net.apply(&g, config.learning_rate);
        }
        let loss = mean_loss(&net, val)?;
        if loss < best_loss {
            best_loss = loss;
            best_net = net.clone();
            stale = 0;
        } else {
            stale += 1;
            if config.patience > 0 && stale >= config.patience {
                break;
            }
        }
    }
    let net = if config.patience > 0 { best_net } else { net };
    let score = RestartScore {
        seed,
        validation_accuracy: accuracy(&net, val)?,
        validation_loss: mean_loss(&net, val)?,
        training_accuracy: accuracy(&net, train)?,
        epochs_run,
    };
    Ok((net, score))
}
