use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::multitone::{LabeledSet, Signal};
use crate::rng;

use super::{adam_step, backward, forward, loss_sparse_ce, predict, AdamHyper, AdamState, LayerParams, Network, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamHyper,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            adam: AdamHyper::default(),
        }
    }
}

/// Per-epoch history of one training run.
///
/// `epoch_losses[e]` is the mean loss seen during epoch `e + 1`;
/// `weight_distances[l][e]` is the distance of conv layer `l` from its
/// initial value after `e` epochs, so index 0 is always 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingRecord {
    pub epoch_losses: Vec<f64>,
    pub weight_distances: Vec<Vec<f64>>,
    /// Same as `weight_distances` for the dense layers.
    pub dense_distances: Vec<Vec<f64>>,
    pub final_accuracy: f64,
}

fn layer_distance(a: &LayerParams, b: &LayerParams) -> f64 {
    a.weights
        .iter()
        .chain(&a.biases)
        .zip(b.weights.iter().chain(&b.biases))
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between `w0` and `wi` per conv layer, taps and biases together.
pub fn weight_distance(w0: &Parameters, wi: &Parameters) -> Result<Vec<f64>> {
    w0.check_shape(wi)?;
    Ok(w0.conv.iter().zip(&wi.conv).map(|(a, b)| layer_distance(a, b)).collect())
}

fn dense_distance(w0: &Parameters, wi: &Parameters) -> Vec<f64> {
    w0.dense.iter().zip(&wi.dense).map(|(a, b)| layer_distance(a, b)).collect()
}

/// Fraction of `set` the network classifies correctly.
pub fn accuracy(net: &Network, set: &LabeledSet) -> Result<f64> {
    let predicted = predict(net, &set.inputs)?;
    let hits = predicted.iter().zip(&set.labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / set.len() as f64)
}

/// Mini-batch Adam on sparse cross-entropy. Each epoch visits the set in a
/// fresh order drawn from `seed`.
pub fn train(net: &mut Network, trainset: &LabeledSet, cfg: &TrainConfig, seed: u64) -> Result<TrainingRecord> {
    if trainset.is_empty() {
        return Err(invalid("training set is empty"));
    }
    if trainset.labels.len() != trainset.inputs.len() {
        return Err(Error::LengthMismatch {
            expected: trainset.inputs.len(),
            actual: trainset.labels.len(),
        });
    }
    if cfg.batch_size == 0 {
        return Err(invalid("batch size must be positive"));
    }
    let w0 = net.parameters().clone();
    let mut adam = AdamState::new(&w0, cfg.adam)?;
    let mut rng = rng::seeded(seed);
    let mut order: Vec<usize> = (0..trainset.len()).collect();

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut weight_distances = vec![vec![0.0]; w0.conv.len()];
    let mut dense_distances = vec![vec![0.0]; w0.dense.len()];

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Signal> = chunk.iter().map(|&i| trainset.inputs[i].clone()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| trainset.labels[i]).collect();
            let (logits, cache) = forward(net, &batch)?;
            loss_sum += loss_sparse_ce(&logits, &labels)? * chunk.len() as f64;
            let grads = backward(net, &cache, &labels)?;
            adam_step(&mut adam, net.parameters_mut(), &grads)?;
        }
        epoch_losses.push(loss_sum / trainset.len() as f64);
        for (track, d) in weight_distances.iter_mut().zip(weight_distance(&w0, net.parameters())?) {
            track.push(d);
        }
        for (track, d) in dense_distances.iter_mut().zip(dense_distance(&w0, net.parameters())) {
            track.push(d);
        }
    }

    Ok(TrainingRecord {
        epoch_losses,
        weight_distances,
        dense_distances,
        final_accuracy: accuracy(net, trainset)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multitone::{sample_dataset, DatasetSpec};
    use crate::stats::median;
    use crate::trainer::{init_network, Activation, Architecture, ConvSpec, FlattenMode, Head};

    fn tiny_arch() -> Architecture {
        Architecture {
            conv_layers: vec![ConvSpec { filters: 2, kernel_size: 3, activation: Activation::Relu }],
            head: Head { hidden_units: 4, n_classes: 2 },
            flatten_mode: FlattenMode::GlobalAverage,
            input_len: 16,
        }
    }

    /// Two classes that differ only in their constant offset.
    fn separable_set(seed: u64) -> LabeledSet {
        let spec = DatasetSpec {
            class_means: vec![2.0, 3.0],
            freq_std: 0.1,
            samples_per_class: 20,
            sample_rate: 16.0,
            duration: 1.0,
            dc_map: Some([(0, -1.0), (1, 1.0)].into_iter().collect()),
        };
        sample_dataset(&spec, seed).unwrap()
    }

    #[test]
    fn distance_examples() {
        let net = init_network(&tiny_arch(), 1).unwrap();
        let w0 = net.parameters().clone();
        assert_eq!(weight_distance(&w0, &w0).unwrap(), vec![0.0]);
        let zero = Parameters::zeros_like(&w0);
        let mut unit = zero.clone();
        unit.conv[0].weights[0] = 0.6;
        unit.conv[0].biases[1] = 0.8;
        assert!((weight_distance(&zero, &unit).unwrap()[0] - 1.0).abs() < 1e-15);
        let other = init_network(&tiny_arch(), 2).unwrap();
        let d02 = weight_distance(&w0, other.parameters()).unwrap()[0];
        let d01 = weight_distance(&w0, &unit).unwrap()[0];
        let d12 = weight_distance(&unit, other.parameters()).unwrap()[0];
        assert!(d02 <= d01 + d12 + 1e-15);
        let mut arch = tiny_arch();
        arch.conv_layers.push(arch.conv_layers[0]);
        let bigger = init_network(&arch, 1).unwrap();
        assert!(weight_distance(&w0, bigger.parameters()).is_err());
    }

    #[test]
    fn zero_epochs_records_only_the_start() {
        let mut net = init_network(&tiny_arch(), 1).unwrap();
        let rec = train(&mut net, &separable_set(0), &TrainConfig { epochs: 0, ..Default::default() }, 0).unwrap();
        assert!(rec.epoch_losses.is_empty());
        assert_eq!(rec.weight_distances, vec![vec![0.0]]);
    }

    #[test]
    fn training_is_reproducible() {
        let set = separable_set(1);
        let cfg = TrainConfig { epochs: 3, batch_size: 8, ..Default::default() };
        let run = || {
            let mut net = init_network(&tiny_arch(), 4).unwrap();
            (train(&mut net, &set, &cfg, 9).unwrap(), net)
        };
        let (r1, n1) = run();
        let (r2, n2) = run();
        assert_eq!(r1, r2);
        assert_eq!(n1.parameters(), n2.parameters());
        assert_eq!(r1.epoch_losses.len(), 3);
        assert_eq!(r1.weight_distances[0].len(), 4);
    }

    #[test]
    fn loss_falls_on_separable_data() {
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 8,
            adam: AdamHyper { lr: 1e-2, ..Default::default() },
        };
        let drops: Vec<f64> = (0..5)
            .map(|seed| {
                let set = separable_set(seed);
                let mut net = init_network(&tiny_arch(), seed).unwrap();
                let rec = train(&mut net, &set, &cfg, seed).unwrap();
                rec.epoch_losses[0] - rec.epoch_losses.last().unwrap()
            })
            .collect();
        assert!(median(&drops) > 0.0, "{drops:?}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut net = init_network(&tiny_arch(), 1).unwrap();
        let mut set = separable_set(0);
        let cfg = TrainConfig { batch_size: 0, ..Default::default() };
        assert!(train(&mut net, &set, &cfg, 0).is_err());
        set.inputs.clear();
        set.labels.clear();
        assert!(train(&mut net, &set, &TrainConfig::default(), 0).is_err());
    }
}
