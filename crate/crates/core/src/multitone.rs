//! Multi-tone signal model, synthesis and the seeded classification datasets.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::rng;

/// One cosine `amplitude · cos(2π · frequency · t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineComponent {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl CosineComponent {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        if !(amplitude.is_finite() && frequency.is_finite() && phase.is_finite()) {
            return Err(invalid("cosine parameters must be finite"));
        }
        if amplitude < 0.0 {
            return Err(invalid(format!("amplitude must be >= 0, got {amplitude}")));
        }
        if frequency < 0.0 {
            return Err(invalid(format!("frequency must be >= 0, got {frequency}")));
        }
        Ok(Self {
            amplitude,
            frequency,
            phase,
        })
    }

    pub fn zero_phase(amplitude: f64, frequency: f64) -> Result<Self> {
        Self::new(amplitude, frequency, 0.0)
    }
}

/// A finite sum of cosines with pairwise distinct frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTone {
    components: Vec<CosineComponent>,
}

fn same_frequency(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl MultiTone {
    /// Builds a multi-tone, merging components that share a frequency by
    /// phasor addition. Order of first occurrence is kept.
    pub fn new(components: impl IntoIterator<Item = CosineComponent>) -> Self {
        let mut merged: Vec<(f64, Complex64)> = Vec::new();
        for c in components {
            let phasor = Complex64::from_polar(c.amplitude, c.phase);
            match merged.iter_mut().find(|(f, _)| same_frequency(*f, c.frequency)) {
                Some((_, acc)) => *acc += phasor,
                None => merged.push((c.frequency, phasor)),
            }
        }
        let components = merged
            .into_iter()
            .map(|(frequency, p)| {
                let (amplitude, phase) = p.to_polar();
                CosineComponent {
                    amplitude,
                    frequency,
                    phase: if amplitude == 0.0 { 0.0 } else { phase },
                }
            })
            .collect();
        Self { components }
    }

    pub fn components(&self) -> &[CosineComponent] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.amplitude).collect()
    }

    pub fn max_frequency(&self) -> f64 {
        self.components.iter().map(|c| c.frequency).fold(0.0, f64::max)
    }

    pub fn is_zero_phase(&self) -> bool {
        self.components.iter().all(|c| c.phase == 0.0)
    }

    /// Every amplitude multiplied by `factor` (frequencies and phases kept).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| CosineComponent {
                    amplitude: c.amplitude * factor.abs(),
                    phase: if factor < 0.0 {
                        c.phase + std::f64::consts::PI
                    } else {
                        c.phase
                    },
                    ..*c
                })
                .collect(),
        }
    }

    /// Value of the continuous-time model at `t` seconds.
    pub fn eval(&self, t: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.amplitude * (TAU * c.frequency * t + c.phase).cos())
            .sum()
    }
}

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("signal must have at least one sample"));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(invalid(format!("sample rate must be > 0, got {sample_rate}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |k| k as f64 / self.sample_rate)
    }

    /// Same sample rate, samples replaced through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Signal {
        Signal {
            samples: self.samples.iter().map(|&x| f(x)).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub(crate) fn from_parts_unchecked(samples: Vec<f64>, sample_rate: f64) -> Signal {
        debug_assert!(!samples.is_empty() && sample_rate > 0.0);
        Signal {
            samples,
            sample_rate,
        }
    }
}

pub(crate) fn sample_count(sample_rate: f64, duration: f64) -> Result<usize> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(invalid(format!("sample rate must be > 0, got {sample_rate}")));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(invalid(format!("duration must be > 0, got {duration}")));
    }
    let n = (duration * sample_rate).round();
    if n < 1.0 {
        return Err(invalid("duration yields no samples at this rate"));
    }
    Ok(n as usize)
}

/// Samples `tones` on `k / sample_rate`, `k = 0 .. round(duration · sample_rate)`.
pub fn synthesize(tones: &MultiTone, sample_rate: f64, duration: f64) -> Result<Signal> {
    if tones.is_empty() {
        return Err(Error::EmptyTone);
    }
    let n = sample_count(sample_rate, duration)?;
    let nyquist = sample_rate / 2.0;
    if let Some(c) = tones.components().iter().find(|c| c.frequency >= nyquist) {
        return Err(Error::Aliasing {
            frequency: c.frequency,
            nyquist,
        });
    }
    let samples = (0..n)
        .map(|k| tones.eval(k as f64 / sample_rate))
        .collect();
    Ok(Signal::from_parts_unchecked(samples, sample_rate))
}

/// Zero-phase tones at `f0, 2·f0, …, n_harmonics·f0`.
pub fn harmonic_stack(f0: f64, n_harmonics: usize, amplitudes: &[f64]) -> Result<MultiTone> {
    if !(f0.is_finite() && f0 > 0.0) {
        return Err(invalid(format!("fundamental must be > 0, got {f0}")));
    }
    if n_harmonics == 0 {
        return Err(invalid("need at least one harmonic"));
    }
    if amplitudes.len() != n_harmonics {
        return Err(Error::LengthMismatch {
            expected: n_harmonics,
            actual: amplitudes.len(),
        });
    }
    let components = amplitudes
        .iter()
        .enumerate()
        .map(|(i, &a)| CosineComponent::zero_phase(a, (i + 1) as f64 * f0))
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiTone::new(components))
}

/// Geometry of the frequency-classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub class_means: Vec<f64>,
    pub freq_std: f64,
    pub samples_per_class: usize,
    pub sample_rate: f64,
    pub duration: f64,
    /// Constant added to every sample of a class-`c` signal.
    pub dc_map: Option<BTreeMap<usize, f64>>,
}

impl DatasetSpec {
    /// Class means 3, 5 and 10 Hz with σ = 0.1 Hz at 64 Hz for 1 s.
    pub fn frequency_classes(samples_per_class: usize) -> Self {
        Self {
            class_means: vec![3.0, 5.0, 10.0],
            freq_std: 0.1,
            samples_per_class,
            sample_rate: 64.0,
            duration: 1.0,
            dc_map: None,
        }
    }

    /// Class `c` offset by `c + 1`.
    pub fn with_class_dc(mut self) -> Self {
        self.dc_map = Some(
            (0..self.class_means.len())
                .map(|c| (c, (c + 1) as f64))
                .collect(),
        );
        self
    }

    pub fn n_classes(&self) -> usize {
        self.class_means.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_means.len() < 2 {
            return Err(invalid("dataset needs at least two classes"));
        }
        if self.class_means.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("class means must be strictly increasing"));
        }
        if !(self.freq_std.is_finite() && self.freq_std >= 0.0) {
            return Err(invalid("frequency std must be finite and >= 0"));
        }
        if self.samples_per_class == 0 {
            return Err(invalid("samples per class must be positive"));
        }
        sample_count(self.sample_rate, self.duration)?;
        let nyquist = self.sample_rate / 2.0;
        for &m in &self.class_means {
            if m - 3.0 * self.freq_std < 0.0 {
                return Err(invalid(format!("class mean {m} Hz too close to 0 for its spread")));
            }
            if m + 3.0 * self.freq_std >= nyquist {
                return Err(Error::Aliasing {
                    frequency: m + 3.0 * self.freq_std,
                    nyquist,
                });
            }
        }
        if let Some(map) = &self.dc_map {
            if let Some(&c) = map.keys().find(|&&c| c >= self.class_means.len()) {
                return Err(invalid(format!("dc_map names unknown class {c}")));
            }
        }
        Ok(())
    }
}

/// Signals with class labels and the frequency each was drawn at.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub inputs: Vec<Signal>,
    pub labels: Vec<usize>,
    pub frequencies: Vec<f64>,
    /// Nominal frequency of each class, indexed by label.
    pub class_means: Vec<f64>,
}

impl LabeledSet {
    pub fn n_classes(&self) -> usize {
        self.class_means.len()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Draws `samples_per_class` signals `cos(2π f t) (+ dc)` per class with
/// `f ~ N(mean_c, freq_std)`. Classes are emitted in order.
pub fn sample_dataset(spec: &DatasetSpec, seed: u64) -> Result<LabeledSet> {
    spec.validate()?;
    let n = sample_count(spec.sample_rate, spec.duration)?;
    let mut rng = rng::seeded(seed);
    let total = spec.samples_per_class * spec.n_classes();
    let mut inputs = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut frequencies = Vec::with_capacity(total);
    for (class, &mean) in spec.class_means.iter().enumerate() {
        let offset = spec
            .dc_map
            .as_ref()
            .and_then(|m| m.get(&class).copied())
            .unwrap_or(0.0);
        for _ in 0..spec.samples_per_class {
            let f = rng::normal(&mut rng, mean, spec.freq_std);
            let samples = (0..n)
                .map(|k| (TAU * f * k as f64 / spec.sample_rate).cos() + offset)
                .collect();
            inputs.push(Signal::from_parts_unchecked(samples, spec.sample_rate));
            labels.push(class);
            frequencies.push(f);
        }
    }
    Ok(LabeledSet {
        inputs,
        labels,
        frequencies,
        class_means: spec.class_means.clone(),
    })
}
