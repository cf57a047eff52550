use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Example, Gradients, Network, Optimizer, OptimizerKind};
use crate::util;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Fraction of the examples held out to drive early stopping.
    pub validation_split: f64,
    pub max_epochs: usize,
    /// Non-improving validation epochs tolerated before stopping; 0 acts as 1.
    pub patience: usize,
    /// Replaces the rate of every dropout layer when set.
    pub dropout: Option<f64>,
    pub l2_lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerKind::RmsProp,
            learning_rate: 0.001,
            batch_size: 32,
            validation_split: 0.0,
            max_epochs: 10,
            patience: 1,
            dropout: None,
            l2_lambda: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(format!("train config: {m}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            return fail("batch size must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.validation_split) {
            return fail(format!("validation split {} outside [0, 1)", self.validation_split));
        }
        if let Some(rate) = self.dropout {
            if !(0.0..1.0).contains(&rate) {
                return fail(format!("dropout rate {rate} outside [0, 1)"));
            }
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return fail(format!("l2 lambda {} must be >= 0", self.l2_lambda));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    /// Mean minibatch objective per epoch, dropout active.
    pub train_loss: Vec<f64>,
    /// Evaluation-mode objective on the held-out examples per epoch; empty
    /// without a validation split.
    pub validation_loss: Vec<f64>,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: Option<usize>,
}

/// Minibatch training with early stopping on the validation loss.
///
/// The examples are shuffled once under the seed and the last
/// `⌈split · N⌉` become the validation set. The training partition is
/// reshuffled every epoch. When a validation set exists, training stops once
/// `patience` consecutive epochs fail to strictly lower the best validation
/// loss, and the best parameters are restored.
pub fn train(mut network: Network, examples: &[Example], config: &TrainConfig) -> Result<(Network, History)> {
    config.validate()?;
    let mut history = History::default();
    if config.max_epochs == 0 {
        return Ok((network, history));
    }
    for ex in examples {
        network.check_example(ex)?;
    }
    let n = examples.len();
    let n_val = if config.validation_split > 0.0 {
        (config.validation_split * n as f64).ceil() as usize
    } else {
        0
    };
    if n_val >= n {
        return Err(Error::invalid(format!(
            "empty training partition: {n} examples with validation split {}",
            config.validation_split
        )));
    }
    let mut rng = util::rng(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let validation: Vec<Example> = order[n - n_val..].iter().map(|&i| examples[i].clone()).collect();
    let mut train_idx = order[..n - n_val].to_vec();

    let lens: Vec<usize> = network
        .layers
        .iter()
        .flat_map(|l| [l.weights.len(), l.biases.len()])
        .collect();
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate, &lens);
    let mut grads = Gradients::zeros_like(&network);
    let mut batch = Vec::with_capacity(config.batch_size);
    let mut best: Option<(f64, Network)> = None;
    let mut stale = 0;

    for epoch in 0..config.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for chunk in train_idx.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| &examples[i]));
            loss_sum += network.accumulate(&batch, config.l2_lambda, Some((&mut rng, config.dropout)), &mut grads)?;
            batches += 1;
            let mut tensors: Vec<(&mut [f64], &[f64])> = Vec::with_capacity(lens.len());
            for ((layer, gw), gb) in network.layers.iter_mut().zip(&grads.weights).zip(&grads.biases) {
                tensors.push((&mut layer.weights[..], &gw[..]));
                tensors.push((&mut layer.biases[..], &gb[..]));
            }
            optimizer.step(&mut tensors);
        }
        if !network.is_finite() {
            return Err(Error::NonFinite { epoch });
        }
        history.train_loss.push(loss_sum / batches as f64);
        if validation.is_empty() {
            history.best_epoch = Some(epoch);
            continue;
        }
        let val = network.loss(&validation, config.l2_lambda)?;
        history.validation_loss.push(val);
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, network.clone()));
            history.best_epoch = Some(epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience.max(1) {
                break;
            }
        }
    }
    if let Some((_, net)) = best {
        network = net;
    }
    Ok((network, history))
}

/// Largest relative error `|a - n| / max(|a|, |n|, 1e-8)` between analytic
/// gradients and central differences, over every parameter, in evaluation
/// mode.
pub fn gradient_check(network: &Network, batch: &[Example], epsilon: f64, l2_lambda: f64) -> Result<f64> {
    let (_, grads) = network.gradients(batch, l2_lambda)?;
    let mut probe = network.clone();
    let mut worst: f64 = 0.0;
    for li in 0..probe.layers.len() {
        for bias in [false, true] {
            let len = if bias {
                probe.layers[li].biases.len()
            } else {
                probe.layers[li].weights.len()
            };
            for j in 0..len {
                let orig = *param_mut(&mut probe, li, bias, j);
                *param_mut(&mut probe, li, bias, j) = orig + epsilon;
                let up = probe.loss(batch, l2_lambda)?;
                *param_mut(&mut probe, li, bias, j) = orig - epsilon;
                let down = probe.loss(batch, l2_lambda)?;
                *param_mut(&mut probe, li, bias, j) = orig;
                let numeric = (up - down) / (2.0 * epsilon);
                let analytic = if bias { grads.biases[li][j] } else { grads.weights[li][j] };
                let denom = analytic.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max((analytic - numeric).abs() / denom);
            }
        }
    }
    Ok(worst)
}

fn param_mut(net: &mut Network, layer: usize, bias: bool, j: usize) -> &mut f64 {
    let l = &mut net.layers[layer];
    if bias {
        &mut l.biases[j]
    } else {
        &mut l.weights[j]
    }
}
