//! DFT spectra and the scalar measures taken from them.
//!
//! Bins are scaled by `1/N`, so a unit cosine at a bin-aligned frequency
//! shows magnitude 0.5 at `+f` and `-f`, and a constant `c` shows `c` at DC.
//! No window is applied; tones that do not land on a bin leak.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::multitone::Signal;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
    bin_resolution: f64,
    sample_rate: f64,
}

impl Spectrum {
    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn bin_resolution(&self) -> f64 {
        self.bin_resolution
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.norm()).collect()
    }

    /// Index of the last bin at or below Nyquist.
    pub fn nyquist_bin(&self) -> usize {
        self.bins.len() / 2
    }

    /// `(frequency, magnitude)` for bins `0 ..= N/2`.
    pub fn one_sided(&self) -> Vec<(f64, f64)> {
        (0..=self.nyquist_bin())
            .map(|k| (k as f64 * self.bin_resolution, self.bins[k].norm()))
            .collect()
    }

    /// Frequency of bin `k` folded to `[0, fs/2]`.
    pub fn folded_frequency(&self, k: usize) -> f64 {
        let n = self.bins.len();
        let k = if k > n / 2 { n - k } else { k };
        k as f64 * self.bin_resolution
    }
}

/// Normalized DFT of the samples.
pub fn spectrum(signal: &Signal) -> Spectrum {
    let n = signal.len();
    let mut bins: Vec<Complex64> = signal
        .samples()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut bins);
    let scale = 1.0 / n as f64;
    for b in &mut bins {
        *b *= scale;
    }
    Spectrum {
        bins,
        bin_resolution: signal.sample_rate() / n as f64,
        sample_rate: signal.sample_rate(),
    }
}

/// Time average of the samples, i.e. the DC component.
pub fn dc_of(signal: &Signal) -> f64 {
    signal.samples().iter().sum::<f64>() / signal.len() as f64
}

/// `‖estimate − reference‖₂ / ‖reference‖₂`.
pub fn rrmse(reference: &Signal, estimate: &Signal) -> Result<f64> {
    rrmse_slices(reference.samples(), estimate.samples())
}

pub fn rrmse_slices(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: estimate.len(),
        });
    }
    let ref_norm = reference.iter().map(|r| r * r).sum::<f64>().sqrt();
    if ref_norm == 0.0 {
        return Err(Error::ZeroReference);
    }
    let err_norm = reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| (e - r) * (e - r))
        .sum::<f64>()
        .sqrt();
    Ok(err_norm / ref_norm)
}

/// Fraction of bins in `(0, Nyquist]` whose magnitude exceeds
/// `threshold_fraction` times the largest magnitude in that range.
pub fn band_occupancy(spec: &Spectrum, threshold_fraction: f64) -> Result<f64> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(invalid(format!(
            "threshold fraction must lie in (0, 1), got {threshold_fraction}"
        )));
    }
    let top = spec.nyquist_bin();
    if top == 0 {
        return Ok(0.0);
    }
    let mags: Vec<f64> = spec.bins[1..=top].iter().map(|b| b.norm()).collect();
    let peak = mags.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let active = mags.iter().filter(|&&m| m > threshold_fraction * peak).count();
    Ok(active as f64 / top as f64)
}

/// Share of total spectral energy (all bins, both halves) at frequencies
/// strictly above `cutoff` Hz.
pub fn energy_fraction_above(spec: &Spectrum, cutoff: f64) -> f64 {
    let total: f64 = spec.bins.iter().map(|b| b.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let above: f64 = spec
        .bins
        .iter()
        .enumerate()
        .filter(|(k, _)| spec.folded_frequency(*k) > cutoff)
        .map(|(_, b)| b.norm_sqr())
        .sum();
    above / total
}
