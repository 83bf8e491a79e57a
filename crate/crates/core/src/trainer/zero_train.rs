//! Untrained single-filter classifier: `GAP(relu(w ∗ x))` with a two-tap `w`.
//!
//! For `x = cos(2π f t)` the output is roughly `b(f)/π`, where `b` is the
//! filter gain, so any kernel whose gain differs across the class
//! frequencies separates the classes without training.

use serde::Serialize;

use crate::convnets::{conv1d, fir_response, Kernel};
use crate::error::{invalid, Result};
use crate::multitone::LabeledSet;
use crate::relu_taylor::{dc_model, relu};
use crate::rng::{self, derive_seed};
use crate::spectral::dc_of;
use crate::stats::{mean, std_dev};

use super::fan_in_uniform;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSource {
    Fixed(Kernel),
    /// Two taps uniform in `±√(1/2)`, as for any fan-in-2 conv layer.
    Random(u64),
}

impl KernelSource {
    pub fn kernel(&self) -> Result<Kernel> {
        match self {
            KernelSource::Fixed(k) => Ok(k.clone()),
            KernelSource::Random(seed) => {
                let mut r = rng::seeded(*seed);
                Kernel::new(vec![fan_in_uniform(&mut r, 2), fan_in_uniform(&mut r, 2)])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDc {
    pub class: usize,
    pub frequency: f64,
    /// Filter gain `b` at the class frequency.
    pub gain: f64,
    /// `(√2/4)·b`, the zeroth-order prediction for a unit tone.
    pub model_dc: f64,
    /// Mean/std of the measured DC over the evaluation set.
    pub dc_mean: f64,
    pub dc_std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroTrainReport {
    pub kernel: Vec<f64>,
    pub classes: Vec<ClassDc>,
    /// Class DC means used by the nearest-mean rule, from the calibration set.
    pub decision_means: Vec<f64>,
    pub accuracy: f64,
    /// Smallest pairwise `|μᵢ − μⱼ| / √(sᵢ²/nᵢ + sⱼ²/nⱼ)` over evaluation classes.
    pub min_separation_se: f64,
    /// `(frequency, dc, class)` for every evaluation signal.
    pub samples: Vec<(f64, f64, usize)>,
}

fn dc_features(kernel: &Kernel, set: &LabeledSet) -> Result<Vec<f64>> {
    set.inputs
        .iter()
        .map(|x| Ok(dc_of(&relu(&conv1d(x, kernel)?))))
        .collect()
}

fn per_class(values: &[f64], labels: &[usize], n_classes: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); n_classes];
    for (&v, &l) in values.iter().zip(labels) {
        out[l].push(v);
    }
    out
}

fn nearest(means: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, m) in means.iter().enumerate() {
        if (v - m).abs() < (v - means[best]).abs() {
            best = i;
        }
    }
    best
}

/// Class DC statistics, filter gains and nearest-class-mean accuracy.
/// Decision means come from `calibration`; everything else from `test`.
pub fn zero_train_eval(source: &KernelSource, calibration: &LabeledSet, test: &LabeledSet) -> Result<ZeroTrainReport> {
    let kernel = source.kernel()?;
    if kernel.len() != 2 {
        return Err(invalid(format!("expected a two-tap kernel, got {} taps", kernel.len())));
    }
    let n_classes = test.n_classes();
    if n_classes < 2 || calibration.n_classes() != n_classes {
        return Err(invalid("need matching sets with at least two classes"));
    }
    let calib_dc = dc_features(&kernel, calibration)?;
    let decision_means: Vec<f64> = per_class(&calib_dc, &calibration.labels, n_classes)
        .iter()
        .map(|v| if v.is_empty() { f64::NAN } else { mean(v) })
        .collect();
    if decision_means.iter().any(|m| m.is_nan()) {
        return Err(invalid("calibration set is missing a class"));
    }

    let test_dc = dc_features(&kernel, test)?;
    let hits = test_dc
        .iter()
        .zip(&test.labels)
        .filter(|(&v, &l)| nearest(&decision_means, v) == l)
        .count();

    let sample_rate = test.inputs[0].sample_rate();
    let response = fir_response(&kernel, &test.class_means, sample_rate)?;
    let grouped = per_class(&test_dc, &test.labels, n_classes);
    let classes: Vec<ClassDc> = grouped
        .iter()
        .enumerate()
        .map(|(c, v)| {
            let gain = response.gains[c];
            Ok(ClassDc {
                class: c,
                frequency: test.class_means[c],
                gain,
                model_dc: dc_model(&[1.0], &[gain])?,
                dc_mean: mean(v),
                dc_std: std_dev(v),
                count: v.len(),
            })
        })
        .collect::<Result<_>>()?;

    let mut min_separation_se = f64::INFINITY;
    for i in 0..n_classes {
        for j in i + 1..n_classes {
            let (a, b) = (&classes[i], &classes[j]);
            let se = (a.dc_std.powi(2) / a.count as f64 + b.dc_std.powi(2) / b.count as f64).sqrt();
            min_separation_se = min_separation_se.min((a.dc_mean - b.dc_mean).abs() / se);
        }
    }

    let samples = test
        .frequencies
        .iter()
        .zip(&test_dc)
        .zip(&test.labels)
        .map(|((&f, &d), &l)| (f, d, l))
        .collect();

    Ok(ZeroTrainReport {
        kernel: kernel.taps().to_vec(),
        classes,
        decision_means,
        accuracy: hits as f64 / test.len() as f64,
        min_separation_se,
        samples,
    })
}

/// Fraction of `n_kernels` random two-tap initializations reaching
/// `min_accuracy`.
pub fn random_init_sweep(
    n_kernels: usize,
    base_seed: u64,
    calibration: &LabeledSet,
    test: &LabeledSet,
    min_accuracy: f64,
) -> Result<f64> {
    if n_kernels == 0 {
        return Err(invalid("need at least one kernel"));
    }
    let mut good = 0;
    for i in 0..n_kernels {
        let src = KernelSource::Random(derive_seed(base_seed, i as u64));
        if zero_train_eval(&src, calibration, test)?.accuracy >= min_accuracy {
            good += 1;
        }
    }
    Ok(good as f64 / n_kernels as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multitone::{sample_dataset, DatasetSpec};

    fn sets(duration: f64) -> (LabeledSet, LabeledSet) {
        let mut spec = DatasetSpec::frequency_classes(60);
        spec.duration = duration;
        let calib = sample_dataset(&spec, 1).unwrap();
        spec.samples_per_class = 40;
        let test = sample_dataset(&spec, 2).unwrap();
        (calib, test)
    }

    fn fixed(t: &[f64]) -> KernelSource {
        KernelSource::Fixed(Kernel::new(t.to_vec()).unwrap())
    }

    #[test]
    fn same_sign_kernel_orders_classes_by_falling_gain() {
        let (calib, test) = sets(32.0);
        let r = zero_train_eval(&fixed(&[0.6, 0.4]), &calib, &test).unwrap();
        let g: Vec<f64> = r.classes.iter().map(|c| c.gain).collect();
        assert!(g[0] > g[1] && g[1] > g[2], "{g:?}");
        let dc: Vec<f64> = r.classes.iter().map(|c| c.dc_mean).collect();
        assert!(dc[0] > dc[1] && dc[1] > dc[2], "{dc:?}");
        assert_eq!(r.accuracy, 1.0);
        assert!(r.min_separation_se > 5.0);
        assert_eq!(r.samples.len(), 120);
    }

    #[test]
    fn equal_taps_follow_the_dc_model() {
        let (calib, test) = sets(32.0);
        let r = zero_train_eval(&fixed(&[0.5, 0.5]), &calib, &test).unwrap();
        for c in &r.classes {
            let ratio = c.model_dc / c.dc_mean;
            assert!((1.0..=1.2).contains(&ratio), "class {}: {ratio}", c.class);
        }
    }

    #[test]
    fn opposite_taps_reverse_the_order() {
        let (calib, test) = sets(32.0);
        let r = zero_train_eval(&fixed(&[1.0, -1.0]), &calib, &test).unwrap();
        let dc: Vec<f64> = r.classes.iter().map(|c| c.dc_mean).collect();
        assert!(dc[0] < dc[1] && dc[1] < dc[2], "{dc:?}");
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn random_kernels_are_reproducible_and_bounded() {
        let a = KernelSource::Random(5).kernel().unwrap();
        assert_eq!(a, KernelSource::Random(5).kernel().unwrap());
        assert_ne!(a, KernelSource::Random(6).kernel().unwrap());
        let bound = 0.5f64.sqrt();
        assert!(a.taps().iter().all(|t| t.abs() <= bound));
    }

    #[test]
    fn rejects_wrong_kernel_length() {
        let (calib, test) = sets(1.0);
        assert!(zero_train_eval(&fixed(&[1.0, 2.0, 3.0]), &calib, &test).is_err());
        assert!(random_init_sweep(0, 0, &calib, &test, 0.9).is_err());
    }
}
