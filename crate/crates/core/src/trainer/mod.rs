//! A small 1-D CNN trained from scratch, and the experiments built on it.
//!
//! The network is `conv → act → … → conv → act → {flatten | GAP} → dense →
//! relu → dense`. Convolutions are causal and zero padded, exactly like
//! [`crate::convnets::conv1d`], with one input channel.

mod adam;
mod compare;
mod model;
mod train;
mod zero_train;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use compare::{run_comparison, Band, ComparisonConfig, ComparisonReport, Variant, VariantResult};
pub use model::{backward, batch_loss, forward, loss_sparse_ce, predict, Cache};
pub use train::{accuracy, train, weight_distance, TrainConfig, TrainingRecord};
pub use zero_train::{random_init_sweep, zero_train_eval, ClassDc, KernelSource, ZeroTrainReport};

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel_size: usize,
    pub activation: Activation,
}

/// Dense hidden layer (ReLU) followed by the output layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Head {
    pub hidden_units: usize,
    pub n_classes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlattenMode {
    Flatten,
    GlobalAverage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Architecture {
    pub conv_layers: Vec<ConvSpec>,
    pub head: Head,
    pub flatten_mode: FlattenMode,
    /// Samples per input signal.
    pub input_len: usize,
}

impl Architecture {
    /// Two conv layers of 8 filters × 5 taps, global average pooling, a
    /// 16-unit ReLU layer and three outputs, for 64-sample inputs.
    pub fn comparison(activation: Activation) -> Self {
        let conv = ConvSpec {
            filters: 8,
            kernel_size: 5,
            activation,
        };
        Self {
            conv_layers: vec![conv, conv],
            head: Head {
                hidden_units: 16,
                n_classes: 3,
            },
            flatten_mode: FlattenMode::GlobalAverage,
            input_len: 64,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        for c in &mut self.conv_layers {
            c.activation = activation;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_layers.is_empty() {
            return Err(invalid("architecture needs at least one conv layer"));
        }
        if self.head.n_classes < 2 {
            return Err(invalid("need at least two classes"));
        }
        if self.head.hidden_units == 0 {
            return Err(invalid("hidden layer must have units"));
        }
        if self.input_len == 0 {
            return Err(invalid("input length must be positive"));
        }
        for c in &self.conv_layers {
            if c.filters == 0 || c.kernel_size == 0 {
                return Err(invalid("conv layers need filters and taps"));
            }
            if c.kernel_size > self.input_len {
                return Err(Error::KernelTooLong {
                    kernel: c.kernel_size,
                    signal: self.input_len,
                });
            }
        }
        Ok(())
    }

    fn feature_len(&self) -> usize {
        let last = self.conv_layers.last().expect("validated").filters;
        match self.flatten_mode {
            FlattenMode::Flatten => last * self.input_len,
            FlattenMode::GlobalAverage => last,
        }
    }

    /// `(in_channels, out_channels, kernel_size)` per conv layer.
    fn conv_shapes(&self) -> Vec<(usize, usize, usize)> {
        let mut in_ch = 1;
        self.conv_layers
            .iter()
            .map(|c| {
                let s = (in_ch, c.filters, c.kernel_size);
                in_ch = c.filters;
                s
            })
            .collect()
    }

    /// `(inputs, outputs)` of the hidden and output dense layers.
    fn dense_shapes(&self) -> [(usize, usize); 2] {
        [
            (self.feature_len(), self.head.hidden_units),
            (self.head.hidden_units, self.head.n_classes),
        ]
    }
}

/// Weights and biases of one layer. Conv weights are laid out
/// `[out][in][tap]`, dense weights `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LayerParams {
    fn zeros(n_weights: usize, n_biases: usize) -> Self {
        Self {
            weights: vec![0.0; n_weights],
            biases: vec![0.0; n_biases],
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.biases)
    }
}

/// Parameters of a whole network; also the shape of gradients and Adam moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    pub conv: Vec<LayerParams>,
    pub dense: Vec<LayerParams>,
}

impl Parameters {
    pub fn zeros_like(other: &Parameters) -> Self {
        let z = |l: &LayerParams| LayerParams::zeros(l.weights.len(), l.biases.len());
        Self {
            conv: other.conv.iter().map(z).collect(),
            dense: other.dense.iter().map(z).collect(),
        }
    }

    fn layers(&self) -> impl Iterator<Item = &LayerParams> {
        self.conv.iter().chain(&self.dense)
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut LayerParams> {
        self.conv.iter_mut().chain(self.dense.iter_mut())
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers().flat_map(|l| l.values())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn count(&self) -> usize {
        self.values().count()
    }

    pub fn same_shape(&self, other: &Parameters) -> bool {
        self.conv.len() == other.conv.len()
            && self.dense.len() == other.dense.len()
            && self.layers().zip(other.layers()).all(|(a, b)| {
                a.weights.len() == b.weights.len() && a.biases.len() == b.biases.len()
            })
    }

    pub(crate) fn check_shape(&self, other: &Parameters) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("parameter sets differ in layout".into()))
        }
    }

    pub fn norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    architecture: Architecture,
    parameters: Parameters,
    seed: u64,
    version: u64,
}

impl Network {
    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn parameters(&self) -> &Parameters {
        &self.parameters
    }

    /// Mutable access invalidates caches from earlier forward passes.
    pub fn parameters_mut(&mut self) -> &mut Parameters {
        self.version += 1;
        &mut self.parameters
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn version(&self) -> u64 {
        self.version
    }
}

/// Uniform draw in `[−√(1/fan_in), √(1/fan_in)]`.
pub(crate) fn fan_in_uniform<R: Rng>(rng: &mut R, fan_in: usize) -> f64 {
    let bound = (1.0 / fan_in as f64).sqrt();
    rng.gen_range(-bound..=bound)
}

/// Weights uniform in `±√(1/fan_in)`, biases zero. Layers are filled in
/// order, conv before dense, weights in storage order.
pub fn init_network(architecture: &Architecture, seed: u64) -> Result<Network> {
    architecture.validate()?;
    let mut rng = rng::seeded(seed);
    let conv = architecture
        .conv_shapes()
        .into_iter()
        .map(|(in_ch, out_ch, k)| {
            let fan_in = in_ch * k;
            LayerParams {
                weights: (0..out_ch * in_ch * k)
                    .map(|_| fan_in_uniform(&mut rng, fan_in))
                    .collect(),
                biases: vec![0.0; out_ch],
            }
        })
        .collect();
    let dense = architecture
        .dense_shapes()
        .into_iter()
        .map(|(inputs, outputs)| LayerParams {
            weights: (0..inputs * outputs)
                .map(|_| fan_in_uniform(&mut rng, inputs))
                .collect(),
            biases: vec![0.0; outputs],
        })
        .collect();
    Ok(Network {
        architecture: architecture.clone(),
        parameters: Parameters { conv, dense },
        seed,
        version: 0,
    })
}
