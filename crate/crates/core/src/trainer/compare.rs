//! Three-way comparison: ReLU convs, linear convs, and linear convs fed
//! inputs with a class-dependent offset added.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::multitone::{sample_dataset, DatasetSpec};
use crate::rng::derive_seed;
use crate::stats::{median, quantile, sign_test_less, SignTest};

use super::{accuracy, init_network, train, Activation, Architecture, TrainConfig, TrainingRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Variant {
    #[serde(rename = "h_relu")]
    Relu,
    #[serde(rename = "h_linear")]
    Linear,
    #[serde(rename = "h_linear_dc")]
    LinearDc,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Relu, Variant::Linear, Variant::LinearDc];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Relu => "h_relu",
            Variant::Linear => "h_linear",
            Variant::LinearDc => "h_linear_dc",
        }
    }

    fn activation(self) -> Activation {
        match self {
            Variant::Relu => Activation::Relu,
            Variant::Linear | Variant::LinearDc => Activation::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonConfig {
    pub class_means: Vec<f64>,
    pub freq_std: f64,
    pub sample_rate: f64,
    pub duration: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Conv activations are overridden per variant.
    pub architecture: Architecture,
    pub training: TrainConfig,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        let data = DatasetSpec::frequency_classes(300);
        Self {
            class_means: data.class_means,
            freq_std: data.freq_std,
            sample_rate: data.sample_rate,
            duration: data.duration,
            train_per_class: 300,
            test_per_class: 100,
            architecture: Architecture::comparison(Activation::Relu),
            training: TrainConfig::default(),
        }
    }
}

impl ComparisonConfig {
    fn dataset(&self, per_class: usize, with_dc: bool) -> DatasetSpec {
        let spec = DatasetSpec {
            class_means: self.class_means.clone(),
            freq_std: self.freq_std,
            samples_per_class: per_class,
            sample_rate: self.sample_rate,
            duration: self.duration,
            dc_map: None,
        };
        if with_dc {
            spec.with_class_dc()
        } else {
            spec
        }
    }
}

/// Median and interquartile range across repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

impl Band {
    fn of(values: &[f64]) -> Self {
        Self {
            median: median(values),
            q25: quantile(values, 0.25),
            q75: quantile(values, 0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantResult {
    pub variant: Variant,
    /// One per repetition, in repetition order.
    pub records: Vec<TrainingRecord>,
    pub test_accuracies: Vec<f64>,
    /// Indexed by epoch − 1.
    pub loss_curve: Vec<Band>,
    /// `[conv layer][epoch]`, epoch 0 being the initialization.
    pub distance_curves: Vec<Vec<Band>>,
}

impl VariantResult {
    fn aggregate(variant: Variant, records: Vec<TrainingRecord>, test_accuracies: Vec<f64>) -> Self {
        let epochs = records[0].epoch_losses.len();
        let layers = records[0].weight_distances.len();
        let loss_curve = (0..epochs)
            .map(|e| Band::of(&records.iter().map(|r| r.epoch_losses[e]).collect::<Vec<_>>()))
            .collect();
        let distance_curves = (0..layers)
            .map(|l| {
                (0..=epochs)
                    .map(|e| Band::of(&records.iter().map(|r| r.weight_distances[l][e]).collect::<Vec<_>>()))
                    .collect()
            })
            .collect();
        Self {
            variant,
            records,
            test_accuracies,
            loss_curve,
            distance_curves,
        }
    }

    /// Final-epoch training loss of every repetition.
    pub fn final_losses(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.epoch_losses.last().copied().unwrap_or(f64::NAN))
            .collect()
    }

    /// Final distance of conv layer `layer` for every repetition.
    pub fn final_distances(&self, layer: usize) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| *r.weight_distances[layer].last().expect("distance track starts at epoch 0"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub n_repetitions: usize,
    pub base_seed: u64,
    pub results: Vec<VariantResult>,
}

impl ComparisonReport {
    pub fn variant(&self, v: Variant) -> &VariantResult {
        self.results
            .iter()
            .find(|r| r.variant == v)
            .expect("every variant is trained")
    }

    /// Sign test that `a`'s final loss is below `b`'s across repetitions.
    pub fn loss_sign_test(&self, a: Variant, b: Variant) -> SignTest {
        sign_test_less(&self.variant(a).final_losses(), &self.variant(b).final_losses())
    }

    /// Sign test that `a`'s final conv-layer distance is below `b`'s.
    pub fn distance_sign_test(&self, a: Variant, b: Variant, layer: usize) -> SignTest {
        sign_test_less(&self.variant(a).final_distances(layer), &self.variant(b).final_distances(layer))
    }
}

/// Seeds used by repetition `rep`: (data, test data, init, shuffle).
fn repetition_seeds(base_seed: u64, rep: usize) -> [u64; 4] {
    let s = derive_seed(base_seed, rep as u64);
    [1, 2, 3, 4].map(|k| derive_seed(s, k))
}

/// Trains the three variants `n_repetitions` times. Within a repetition all
/// variants share the initial weights, the drawn frequencies and the batch
/// order, so results can be compared pairwise.
pub fn run_comparison(cfg: &ComparisonConfig, n_repetitions: usize, base_seed: u64) -> Result<ComparisonReport> {
    if n_repetitions == 0 {
        return Err(invalid("need at least one repetition"));
    }
    let mut per_variant: Vec<(Vec<TrainingRecord>, Vec<f64>)> = vec![Default::default(); Variant::ALL.len()];
    for rep in 0..n_repetitions {
        let [data_seed, test_seed, init_seed, shuffle_seed] = repetition_seeds(base_seed, rep);
        for (slot, variant) in per_variant.iter_mut().zip(Variant::ALL) {
            let with_dc = variant == Variant::LinearDc;
            let trainset = sample_dataset(&cfg.dataset(cfg.train_per_class, with_dc), data_seed)?;
            let testset = sample_dataset(&cfg.dataset(cfg.test_per_class, with_dc), test_seed)?;
            let arch = cfg.architecture.clone().with_activation(variant.activation());
            let mut net = init_network(&arch, init_seed)?;
            let record = train(&mut net, &trainset, &cfg.training, shuffle_seed)?;
            slot.0.push(record);
            slot.1.push(accuracy(&net, &testset)?);
        }
    }
    let results = per_variant
        .into_iter()
        .zip(Variant::ALL)
        .map(|((records, acc), v)| VariantResult::aggregate(v, records, acc))
        .collect();
    Ok(ComparisonReport {
        n_repetitions,
        base_seed,
        results,
    })
}
